#include "wpsc/graph.hpp"

#include "wpsc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace wpsc {

Matrix affinity_from_representation(const Matrix& z) {
    if (z.rows() != z.cols()) fail(ErrorKind::Shape, "affinity: Z must be square");
    if (!z.allFinite()) fail(ErrorKind::Precondition, "affinity: Z has non-finite entries");
    const Matrix a = z.cwiseAbs();
    Matrix w = 0.5 * (a + a.transpose());
    w.diagonal().setZero();
    return w;
}

Matrix ipd_threshold(const Matrix& z, int d) {
    if (d < 1 || d > z.rows()) fail(ErrorKind::Parameter, "ipd: need 1 <= d <= N");
    Matrix out = Matrix::Zero(z.rows(), z.cols());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::abs(z(a, j)) > std::abs(z(b, j));
        });
        for (int t = 0; t < d; ++t) {
            const Eigen::Index i = order[static_cast<std::size_t>(t)];
            out(i, j) = z(i, j);
        }
    }
    return out;
}

void validate_affinity(const Matrix& w) {
    if (w.rows() != w.cols()) fail(ErrorKind::Shape, "affinity must be square");
    if (!w.allFinite()) fail(ErrorKind::Precondition, "affinity has non-finite entries");
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        fail(ErrorKind::Precondition, "affinity is not symmetric");
    if (w.minCoeff() < 0.0) fail(ErrorKind::Precondition, "affinity has negative entries");
    if (w.diagonal().cwiseAbs().maxCoeff() != 0.0)
        fail(ErrorKind::Precondition, "affinity diagonal is not zero");
}

Matrix normalized_laplacian(const Matrix& w) {
    const Eigen::Index n = w.rows();
    Vector inv_sqrt_deg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double deg = std::max(w.row(i).sum(), 1e-12);
        inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
    }
    Matrix l = -(inv_sqrt_deg.asDiagonal() * w * inv_sqrt_deg.asDiagonal());
    l.diagonal().array() += 1.0;
    // Exact symmetry for the eigensolver.
    return 0.5 * (l + l.transpose());
}

namespace {

double sq_dist(const Matrix& points, Eigen::Index i, const Matrix& centroids, Eigen::Index c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

Matrix plus_plus_seed(const Matrix& points, int k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Matrix centroids(k, points.cols());
    centroids.row(0) = points.row(pick(rng));
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& d = d2[static_cast<std::size_t>(i)];
            d = std::min(d, sq_dist(points, i, centroids, c - 1));
            total += d;
        }
        Eigen::Index chosen = pick(rng);
        if (total > 0.0) {
            const double target = uniform(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc >= target && d2[static_cast<std::size_t>(i)] > 0.0) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.row(c) = points.row(chosen);
    }
    return centroids;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, int max_iter) {
    const Eigen::Index n = points.rows();
    const int k = static_cast<int>(centroids.rows());
    Labels labels(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points, i, centroids, 0);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(points, i, centroids, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[static_cast<std::size_t>(i)] != best) {
                labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        // Repair empty clusters before the centroid update.
        for (int c = 0; c < k; ++c) {
            if (std::find(labels.begin(), labels.end(), c) != labels.end()) continue;
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int own = labels[static_cast<std::size_t>(i)];
                const auto own_count = std::count(labels.begin(), labels.end(), own);
                if (own_count <= 1) continue;
                const double d = sq_dist(points, i, centroids, own);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            labels[static_cast<std::size_t>(far)] = c;
            changed = true;
        }
        Matrix sums = Matrix::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = labels[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0)
                centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        if (!changed) break;
    }
    KMeansResult res;
    res.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        res.inertia += sq_dist(points, i, centroids, labels[static_cast<std::size_t>(i)]);
    res.labels = std::move(labels);
    res.centroids = std::move(centroids);
    return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, const KMeansOptions& options) {
    if (k < 1 || k > points.rows()) fail(ErrorKind::Parameter, "kmeans: need 1 <= k <= N");
    if (options.restarts < 1 || options.max_iter < 1)
        fail(ErrorKind::Parameter, "kmeans: restarts and max_iter must be positive");
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < options.restarts; ++r) {
        std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(r));
        KMeansResult res = lloyd(points, plus_plus_seed(points, k, rng), options.max_iter);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

Labels spectral_clustering(const Matrix& w, int clusters, std::uint64_t seed) {
    validate_affinity(w);
    const Eigen::Index n = w.rows();
    if (clusters < 1 || clusters > n) {
        fail(ErrorKind::Parameter, "spectral clustering: C = " + std::to_string(clusters) +
                                       " with N = " + std::to_string(n));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(normalized_laplacian(w));
    if (eig.info() != Eigen::Success) fail(ErrorKind::Convergence, "spectral clustering: eigensolver failed");
    Matrix embedding = eig.eigenvectors().leftCols(clusters);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = embedding.row(i).norm();
        if (norm > 0.0) embedding.row(i) /= norm;
    }
    KMeansOptions opt;
    opt.seed = seed;
    return kmeans(embedding, clusters, opt).labels;
}

}  // namespace wpsc
