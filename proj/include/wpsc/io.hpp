#pragma once

#include "wpsc/dataset.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace wpsc {

/// MNIST-style IDX files: images (magic 0x00000803, u8 pixels) and optional
/// labels (magic 0x00000801). Pixels are scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels = std::nullopt);

/// Binary PGM ("P5", maxval <= 255) files in `dir`, sorted by filename. The
/// first capture group of `class_pattern` (ECMAScript regex, searched in the
/// filename) must be an integer class id. Class ids are remapped to 0..C-1 in
/// ascending order.
Dataset load_pgm_dir(const std::filesystem::path& dir, const std::string& class_pattern);

/// Single binary PGM image, pixels scaled to [0, 1], row-major.
Dataset load_pgm(const std::filesystem::path& file);
void write_pgm(const std::filesystem::path& file, const Matrix& image01);

/// Native matrix bundle:
///   "WPSC1\n", u32 D, u32 N, u32 img_h, u32 img_w, u8 has_labels,
///   D*N f64 column-major, then N u32 labels if labeled. Little-endian.
void save_bundle(const std::filesystem::path& file, const Dataset& ds);
Dataset load_bundle(const std::filesystem::path& file, const std::string& name = {});

/// Bundle of a bare matrix (img_h = rows, img_w = 1, unlabeled).
void save_matrix(const std::filesystem::path& file, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& file);

}  // namespace wpsc
