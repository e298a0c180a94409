#pragma once

#include "wpsc/dataset.hpp"
#include "wpsc/types.hpp"

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace wpsc {

/// One level of the non-decimated 2D Haar filter bank. Subbands keep the
/// input size; naming follows (filter along image rows, filter along columns):
/// A = lo/lo, H = lo/hi, V = hi/lo, D = hi/hi.
struct Subbands {
    Matrix a;
    Matrix h;
    Matrix v;
    Matrix d;
};

/// Orthonormal Haar pair, taps separated by 2^(level-1) (a trous), periodic
/// extension: lo(x)[n] = (x[n] + x[n+s]) / sqrt(2), hi(x)[n] = (x[n] - x[n+s]) / sqrt(2).
/// The four subbands form a tight frame with bound 4.
Subbands haar_analysis_2d(const Matrix& image, int level);

/// Adjoint filter bank scaled by 1/4; inverts haar_analysis_2d at the same level.
Matrix haar_synthesis_2d(const Subbands& bands, int level);

/// Throws unless `path` is a string over {A, H, V, D}.
void validate_subband_path(std::string_view path);

/// All subbands of a J-level wavelet-packet tree. The root "" is the input.
struct WaveletPacketSet {
    int img_h = 0;
    int img_w = 0;
    int levels = 0;
    Matrix original;
    /// Non-root nodes, canonical (lexicographic) order.
    std::map<std::string, Matrix> nodes;

    const Matrix& node(const std::string& path) const;
    std::size_t size() const { return nodes.size(); }
};

/// Filters every column of `ds` through the full packet tree: the children of
/// node p (level j) are p+{A,H,V,D} computed at level j+1 from p's coefficients.
WaveletPacketSet wp_decompose(const Dataset& ds, int levels);

/// path+A, path+H, path+V, path+D (in that order). Depth error at level J.
std::array<std::string, 4> wp_children(const WaveletPacketSet& set, const std::string& path);
std::array<std::string, 4> wp_children(const std::string& path, int levels);

/// Coefficients of a single node, computed along its path only.
Matrix wp_node(const Dataset& ds, const std::string& path);
/// The four children of an already-computed node whose path is `parent_path`.
std::array<Matrix, 4> wp_split(const Matrix& parent, int img_h, int img_w, int child_level);

}  // namespace wpsc
