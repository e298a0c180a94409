#include "wpsc/dataset.hpp"

#include "wpsc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace wpsc {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InfeasibleSpec: return "infeasible-spec";
        case ErrorKind::Format: return "format";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::EmptyInput: return "empty-input";
        case ErrorKind::Labeling: return "labeling";
        case ErrorKind::DegenerateColumn: return "degenerate-column";
        case ErrorKind::Split: return "split";
        case ErrorKind::Size: return "size";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Depth: return "depth";
        case ErrorKind::DegenerateData: return "degenerate-data";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::Parameter: return "parameter";
        case ErrorKind::NoGrid: return "no-grid";
        case ErrorKind::Precondition: return "precondition";
        case ErrorKind::Config: return "config";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Dataset::Dataset(Matrix data, int img_h, int img_w, std::optional<Labels> labels, std::string name)
    : data_(std::move(data)), img_h_(img_h), img_w_(img_w), labels_(std::move(labels)),
      name_(std::move(name)) {
    if (img_h_ <= 0 || img_w_ <= 0 || static_cast<Eigen::Index>(img_h_) * img_w_ != data_.rows()) {
        fail(ErrorKind::Shape, "dataset: img_h*img_w = " + std::to_string(img_h_) + "*" +
                                   std::to_string(img_w_) + " does not match D = " +
                                   std::to_string(data_.rows()));
    }
    if (!data_.allFinite()) fail(ErrorKind::Format, "dataset: non-finite entries");
    if (labels_) {
        if (static_cast<Eigen::Index>(labels_->size()) != data_.cols()) {
            fail(ErrorKind::Consistency, "dataset: " + std::to_string(labels_->size()) +
                                             " labels for " + std::to_string(data_.cols()) +
                                             " columns");
        }
        for (int l : *labels_) {
            if (l < 0) fail(ErrorKind::Labeling, "dataset: negative label");
        }
    }
}

const Labels& Dataset::labels() const {
    if (!labels_) fail(ErrorKind::Labeling, "dataset '" + name_ + "' has no labels");
    return *labels_;
}

int Dataset::num_clusters() const {
    if (!labels_ || labels_->empty()) return 0;
    return *std::max_element(labels_->begin(), labels_->end()) + 1;
}

Dataset Dataset::subset(std::span<const int> indices) const {
    Matrix sub(data_.rows(), static_cast<Eigen::Index>(indices.size()));
    std::optional<Labels> sub_labels;
    if (labels_) sub_labels.emplace();
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const int i = indices[k];
        if (i < 0 || i >= data_.cols()) fail(ErrorKind::Parameter, "subset: index out of range");
        sub.col(static_cast<Eigen::Index>(k)) = data_.col(i);
        if (labels_) sub_labels->push_back((*labels_)[static_cast<std::size_t>(i)]);
    }
    return Dataset(std::move(sub), img_h_, img_w_, std::move(sub_labels), name_);
}

Dataset Dataset::with_data(Matrix data) const {
    if (data.rows() != data_.rows() || data.cols() != data_.cols()) {
        fail(ErrorKind::Shape, "with_data: shape mismatch");
    }
    return Dataset(std::move(data), img_h_, img_w_, labels_, name_);
}

Dataset Dataset::with_name(std::string name) const {
    Dataset out = *this;
    out.name_ = std::move(name);
    return out;
}

std::pair<int, int> most_square_factorization(int n) {
    if (n <= 0) fail(ErrorKind::Parameter, "most_square_factorization: n must be positive");
    int h = static_cast<int>(std::sqrt(static_cast<double>(n)));
    while (h > 1 && n % h != 0) --h;
    while ((h + 1) * (h + 1) <= n && n % (h + 1) == 0) ++h;
    return {h, n / h};
}

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    // Fill column-major explicitly so the draw order is part of the contract.
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
}

Matrix orthonormal_columns(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    return q;
}

void check_uos_spec(const UosSpec& spec) {
    if (spec.clusters < 1 || spec.subspace_dim < 1 || spec.ambient_dim < 1 ||
        spec.n_per_cluster < 1 || spec.noise_sigma < 0.0) {
        fail(ErrorKind::InfeasibleSpec, "uos spec: sizes must be positive");
    }
    if (spec.subspace_dim >= spec.ambient_dim) {
        fail(ErrorKind::InfeasibleSpec, "uos spec: d must be smaller than D");
    }
    if (static_cast<long long>(spec.clusters) * spec.subspace_dim > spec.ambient_dim) {
        fail(ErrorKind::InfeasibleSpec, "uos spec: C*d = " +
                                            std::to_string(spec.clusters * spec.subspace_dim) +
                                            " exceeds D = " + std::to_string(spec.ambient_dim));
    }
}

std::pair<int, int> grid_for(const UosSpec& spec) {
    if (spec.img_h > 0 || spec.img_w > 0) {
        if (spec.img_h * spec.img_w != spec.ambient_dim) {
            fail(ErrorKind::InfeasibleSpec, "uos spec: img_h*img_w must equal D");
        }
        return {spec.img_h, spec.img_w};
    }
    return most_square_factorization(spec.ambient_dim);
}

Matrix alternating_noise(int h, int w, Eigen::Index n, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix noise(static_cast<Eigen::Index>(h) * w, n);
    // Each of the two components carries half of the variance.
    const double scale = sigma / std::sqrt(2.0);
    std::vector<double> f(static_cast<std::size_t>(w)), g(static_cast<std::size_t>(h));
    for (Eigen::Index j = 0; j < n; ++j) {
        for (auto& v : f) v = normal(rng);
        for (auto& v : g) v = normal(rng);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const double sr = (r % 2 == 0) ? 1.0 : -1.0;
                const double sc = (c % 2 == 0) ? 1.0 : -1.0;
                noise(r * w + c, j) = scale * (sr * f[static_cast<std::size_t>(c)] +
                                               sc * g[static_cast<std::size_t>(r)]);
            }
        }
    }
    return noise;
}

}  // namespace

Dataset generate_uos(const UosSpec& spec) {
    check_uos_spec(spec);
    const auto [h, w] = grid_for(spec);
    std::mt19937_64 rng(spec.seed);
    const Eigen::Index D = spec.ambient_dim;
    const Eigen::Index n = spec.n_per_cluster;
    Matrix x(D, n * spec.clusters);
    Labels labels;
    labels.reserve(static_cast<std::size_t>(x.cols()));
    for (int c = 0; c < spec.clusters; ++c) {
        const Matrix basis = orthonormal_columns(gaussian_matrix(D, spec.subspace_dim, rng));
        const Matrix coeffs = gaussian_matrix(spec.subspace_dim, n, rng);
        x.middleCols(c * n, n) = basis * coeffs;
        labels.insert(labels.end(), static_cast<std::size_t>(n), c);
    }
    if (spec.noise_sigma > 0.0) x += spec.noise_sigma * gaussian_matrix(D, x.cols(), rng);
    return Dataset(std::move(x), h, w, std::move(labels), "uos");
}

Dataset generate_smooth_uos(const UosSpec& spec, int max_frequency) {
    if (spec.clusters < 1 || spec.subspace_dim < 1 || spec.n_per_cluster < 1) {
        fail(ErrorKind::InfeasibleSpec, "smooth uos spec: sizes must be positive");
    }
    const auto [h, w] = grid_for(spec);
    const int modes = (max_frequency + 1) * (max_frequency + 1);
    if (spec.subspace_dim > modes) {
        fail(ErrorKind::InfeasibleSpec, "smooth uos spec: d exceeds the number of cosine modes");
    }
    std::mt19937_64 rng(spec.seed);
    const Eigen::Index D = static_cast<Eigen::Index>(h) * w;
    Matrix dictionary(D, modes);
    int m = 0;
    for (int p = 0; p <= max_frequency; ++p) {
        for (int q = 0; q <= max_frequency; ++q, ++m) {
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c)
                    dictionary(r * w + c, m) =
                        std::cos(std::numbers::pi * p * (r + 0.5) / h) *
                        std::cos(std::numbers::pi * q * (c + 0.5) / w);
        }
    }
    const Eigen::Index n = spec.n_per_cluster;
    Matrix x(D, n * spec.clusters);
    Labels labels;
    for (int c = 0; c < spec.clusters; ++c) {
        const Matrix basis =
            orthonormal_columns(dictionary * gaussian_matrix(modes, spec.subspace_dim, rng));
        x.middleCols(c * n, n) = basis * gaussian_matrix(spec.subspace_dim, n, rng);
        labels.insert(labels.end(), static_cast<std::size_t>(n), c);
    }
    if (spec.noise_sigma > 0.0) x += alternating_noise(h, w, x.cols(), spec.noise_sigma, rng);
    return Dataset(std::move(x), h, w, std::move(labels), "smooth-uos");
}

Dataset add_alternating_noise(const Dataset& ds, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return ds.with_data(ds.data() + alternating_noise(ds.img_h(), ds.img_w(), ds.size(), sigma, rng));
}

Matrix column_normalize(const Matrix& x) {
    Matrix out = x;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double norm = out.col(j).norm();
        if (norm == 0.0) {
            fail(ErrorKind::DegenerateColumn, "column_normalize: column " + std::to_string(j) +
                                                  " is zero");
        }
        out.col(j) /= norm;
    }
    return out;
}

Dataset column_normalize(const Dataset& ds) { return ds.with_data(column_normalize(ds.data())); }

namespace {

std::vector<std::vector<int>> members_by_cluster(const Labels& labels) {
    int c_max = 0;
    for (int l : labels) c_max = std::max(c_max, l + 1);
    std::vector<std::vector<int>> members(static_cast<std::size_t>(c_max));
    for (std::size_t i = 0; i < labels.size(); ++i)
        members[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
    return members;
}

}  // namespace

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    if (!(spec.in_fraction > 0.0 && spec.in_fraction <= 1.0)) {
        fail(ErrorKind::Split, "split: in_fraction must lie in (0, 1]");
    }
    const Labels& labels = ds.labels();
    auto members = members_by_cluster(labels);
    std::mt19937_64 rng(spec.seed);
    SplitResult result;
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& idx = members[c];
        if (idx.empty()) fail(ErrorKind::Split, "split: cluster " + std::to_string(c) + " is empty");
        std::shuffle(idx.begin(), idx.end(), rng);
        // Guard against 0.8 * 50 landing a hair above 40.
        const auto keep = static_cast<std::size_t>(
            std::ceil(spec.in_fraction * static_cast<double>(idx.size()) - 1e-9));
        if (keep == 0) fail(ErrorKind::Split, "split: cluster " + std::to_string(c) + " empty in-sample");
        result.in_indices.insert(result.in_indices.end(), idx.begin(),
                                 idx.begin() + static_cast<std::ptrdiff_t>(keep));
        result.out_indices.insert(result.out_indices.end(),
                                  idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end());
    }
    std::sort(result.in_indices.begin(), result.in_indices.end());
    std::sort(result.out_indices.begin(), result.out_indices.end());
    result.in_sample = ds.subset(result.in_indices);
    result.out_sample = ds.subset(result.out_indices);
    return result;
}

std::vector<int> stratified_subset(const Labels& labels, int per_cluster, std::uint64_t seed) {
    if (per_cluster < 1) fail(ErrorKind::Parameter, "stratified_subset: per_cluster must be >= 1");
    auto members = members_by_cluster(labels);
    std::mt19937_64 rng(seed);
    std::vector<int> out;
    for (auto& idx : members) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t keep = std::min(idx.size(), static_cast<std::size_t>(per_cluster));
        out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace wpsc
