#include "wpsc/wavelet.hpp"

#include "wpsc/error.hpp"

#include <cmath>
#include <numbers>

namespace wpsc {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

int hole_step(int level) { return 1 << (level - 1); }

void check_level(Eigen::Index h, Eigen::Index w, int level) {
    if (level < 1 || level > 30) fail(ErrorKind::Size, "haar: level must be >= 1");
    const Eigen::Index support = Eigen::Index{1} << level;
    if (h < support || w < support) {
        fail(ErrorKind::Size, "haar: " + std::to_string(h) + "x" + std::to_string(w) +
                                  " image is smaller than the level-" + std::to_string(level) +
                                  " filter support " + std::to_string(support));
    }
}

// sign = +1 for the low-pass, -1 for the high-pass branch.
Matrix filter_rows(const Matrix& x, int step, double sign) {
    const Eigen::Index h = x.rows();
    Matrix y(h, x.cols());
    for (Eigen::Index r = 0; r < h; ++r)
        y.row(r) = kInvSqrt2 * (x.row(r) + sign * x.row((r + step) % h));
    return y;
}

Matrix filter_cols(const Matrix& x, int step, double sign) {
    const Eigen::Index w = x.cols();
    Matrix y(x.rows(), w);
    for (Eigen::Index c = 0; c < w; ++c)
        y.col(c) = kInvSqrt2 * (x.col(c) + sign * x.col((c + step) % w));
    return y;
}

// Adjoints of the two filters above.
Matrix adjoint_rows(const Matrix& y, int step, double sign) {
    const Eigen::Index h = y.rows();
    Matrix x(h, y.cols());
    for (Eigen::Index r = 0; r < h; ++r)
        x.row(r) = kInvSqrt2 * (y.row(r) + sign * y.row((r - step % h + h) % h));
    return x;
}

Matrix adjoint_cols(const Matrix& y, int step, double sign) {
    const Eigen::Index w = y.cols();
    Matrix x(y.rows(), w);
    for (Eigen::Index c = 0; c < w; ++c)
        x.col(c) = kInvSqrt2 * (y.col(c) + sign * y.col((c - step % w + w) % w));
    return x;
}

Matrix column_as_image(const Matrix& x, Eigen::Index j, int h, int w) {
    return Eigen::Map<const RowMajorMatrix>(x.col(j).data(), h, w);
}

void store_image(Matrix& x, Eigen::Index j, const Matrix& img) {
    Eigen::Map<RowMajorMatrix>(x.col(j).data(), img.rows(), img.cols()) = img;
}

std::size_t band_index(char c) {
    switch (c) {
        case 'A': return 0;
        case 'H': return 1;
        case 'V': return 2;
        case 'D': return 3;
        default: fail(ErrorKind::Parameter, std::string("subband path: invalid letter '") + c + "'");
    }
}

}  // namespace

Subbands haar_analysis_2d(const Matrix& image, int level) {
    check_level(image.rows(), image.cols(), level);
    const int s = hole_step(level);
    const Matrix lo = filter_rows(image, s, 1.0);
    const Matrix hi = filter_rows(image, s, -1.0);
    return Subbands{filter_cols(lo, s, 1.0), filter_cols(lo, s, -1.0), filter_cols(hi, s, 1.0),
                    filter_cols(hi, s, -1.0)};
}

Matrix haar_synthesis_2d(const Subbands& b, int level) {
    const auto same = [&](const Matrix& m) { return m.rows() == b.a.rows() && m.cols() == b.a.cols(); };
    if (!same(b.h) || !same(b.v) || !same(b.d)) fail(ErrorKind::Shape, "haar synthesis: shape mismatch");
    check_level(b.a.rows(), b.a.cols(), level);
    const int s = hole_step(level);
    const Matrix lo = adjoint_cols(b.a, s, 1.0) + adjoint_cols(b.h, s, -1.0);
    const Matrix hi = adjoint_cols(b.v, s, 1.0) + adjoint_cols(b.d, s, -1.0);
    return 0.25 * (adjoint_rows(lo, s, 1.0) + adjoint_rows(hi, s, -1.0));
}

void validate_subband_path(std::string_view path) {
    for (char c : path) band_index(c);
}

const Matrix& WaveletPacketSet::node(const std::string& path) const {
    if (path.empty()) return original;
    auto it = nodes.find(path);
    if (it == nodes.end()) fail(ErrorKind::Depth, "wavelet packet set has no node '" + path + "'");
    return it->second;
}

std::array<Matrix, 4> wp_split(const Matrix& parent, int img_h, int img_w, int child_level) {
    if (static_cast<Eigen::Index>(img_h) * img_w != parent.rows())
        fail(ErrorKind::Shape, "wp_split: image grid does not match D");
    check_level(img_h, img_w, child_level);
    std::array<Matrix, 4> out;
    for (auto& m : out) m.resize(parent.rows(), parent.cols());
    for (Eigen::Index j = 0; j < parent.cols(); ++j) {
        const Subbands b = haar_analysis_2d(column_as_image(parent, j, img_h, img_w), child_level);
        store_image(out[0], j, b.a);
        store_image(out[1], j, b.h);
        store_image(out[2], j, b.v);
        store_image(out[3], j, b.d);
    }
    return out;
}

WaveletPacketSet wp_decompose(const Dataset& ds, int levels) {
    if (levels < 1) fail(ErrorKind::Parameter, "wp_decompose: levels must be >= 1");
    check_level(ds.img_h(), ds.img_w(), levels);
    WaveletPacketSet set;
    set.img_h = ds.img_h();
    set.img_w = ds.img_w();
    set.levels = levels;
    set.original = ds.data();
    std::vector<std::string> frontier{""};
    for (int level = 1; level <= levels; ++level) {
        std::vector<std::string> next;
        for (const auto& parent : frontier) {
            auto children = wp_split(set.node(parent), set.img_h, set.img_w, level);
            const auto names = wp_children(parent, levels);
            for (std::size_t k = 0; k < 4; ++k) {
                set.nodes.emplace(names[k], std::move(children[k]));
                next.push_back(names[k]);
            }
        }
        frontier = std::move(next);
    }
    return set;
}

std::array<std::string, 4> wp_children(const std::string& path, int levels) {
    validate_subband_path(path);
    if (static_cast<int>(path.size()) >= levels) {
        fail(ErrorKind::Depth, "subband '" + path + "' is a leaf of a " + std::to_string(levels) +
                                   "-level tree");
    }
    return {path + 'A', path + 'H', path + 'V', path + 'D'};
}

std::array<std::string, 4> wp_children(const WaveletPacketSet& set, const std::string& path) {
    return wp_children(path, set.levels);
}

Matrix wp_node(const Dataset& ds, const std::string& path) {
    validate_subband_path(path);
    Matrix current = ds.data();
    for (std::size_t k = 0; k < path.size(); ++k) {
        auto children = wp_split(current, ds.img_h(), ds.img_w(), static_cast<int>(k) + 1);
        current = std::move(children[band_index(path[k])]);
    }
    return current;
}

}  // namespace wpsc
