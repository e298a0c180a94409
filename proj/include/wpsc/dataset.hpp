#pragma once

#include "wpsc/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

namespace wpsc {

/// Column matrix of vectorized images. Column n is image n, vectorized
/// row-major over an img_h x img_w grid (pixel (r, c) sits at row r*img_w + c).
class Dataset {
public:
    Dataset() = default;
    Dataset(Matrix data, int img_h, int img_w, std::optional<Labels> labels = std::nullopt,
            std::string name = {});

    const Matrix& data() const { return data_; }
    int img_h() const { return img_h_; }
    int img_w() const { return img_w_; }
    int dim() const { return static_cast<int>(data_.rows()); }
    int size() const { return static_cast<int>(data_.cols()); }
    const std::string& name() const { return name_; }

    bool has_labels() const { return labels_.has_value(); }
    /// Throws a labeling error when the dataset is unlabeled.
    const Labels& labels() const;
    /// max label + 1; zero for unlabeled data.
    int num_clusters() const;

    /// Columns at `indices`, in the given order, with matching labels.
    Dataset subset(std::span<const int> indices) const;
    /// Same metadata, different values (shape must match).
    Dataset with_data(Matrix data) const;
    Dataset with_name(std::string name) const;

private:
    Matrix data_;
    int img_h_ = 0;
    int img_w_ = 0;
    std::optional<Labels> labels_;
    std::string name_;
};

struct SplitSpec {
    double in_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct UosSpec {
    int clusters = 2;
    int subspace_dim = 1;
    int ambient_dim = 4;
    int n_per_cluster = 3;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Image grid; zero means "most square factorization of ambient_dim".
    int img_h = 0;
    int img_w = 0;
};

struct SplitResult {
    Dataset in_sample;
    Dataset out_sample;
    std::vector<int> in_indices;
    std::vector<int> out_indices;
};

/// (h, w) with h * w = n, h <= w, and w - h minimal.
std::pair<int, int> most_square_factorization(int n);

/// X_c = A_c Z_c + sigma E with A_c orthonormal (QR of a seeded Gaussian matrix).
/// Points are stored cluster by cluster.
Dataset generate_uos(const UosSpec& spec);

/// Union of subspaces whose bases are smooth images (random mixtures of the
/// lowest 2D cosine modes, orthonormalized). The noise term is replaced by
/// alternating-sign noise (-1)^r f(c) + (-1)^c g(r) with std `noise_sigma`,
/// which a 2x2 low-pass filter annihilates. UosSpec::img_h/img_w must be set
/// or D must factor.
Dataset generate_smooth_uos(const UosSpec& spec, int max_frequency = 2);

/// Adds alternating-sign (Nyquist-band) noise of the kind used by
/// generate_smooth_uos to every image of `ds`.
Dataset add_alternating_noise(const Dataset& ds, double sigma, std::uint64_t seed);

/// Scales every column to unit Euclidean norm. Zero columns are an error.
Dataset column_normalize(const Dataset& ds);
Matrix column_normalize(const Matrix& x);

/// Stratified split: each cluster contributes ceil(in_fraction * N_c) points to
/// the in-sample set, picked by a seeded shuffle. Both index lists ascend.
SplitResult split(const Dataset& ds, const SplitSpec& spec);

/// Stratified random subset with `per_cluster` points from every cluster
/// (all points of smaller clusters). Indices ascend.
std::vector<int> stratified_subset(const Labels& labels, int per_cluster, std::uint64_t seed);

}  // namespace wpsc
