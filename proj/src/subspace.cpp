#include "wpsc/subspace.hpp"

#include "wpsc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wpsc {

ClusterModel estimate_bases(const Matrix& x, const Labels& labels, int d) {
    if (static_cast<Eigen::Index>(labels.size()) != x.cols())
        fail(ErrorKind::Consistency, "estimate_bases: label count does not match columns");
    if (d < 1) fail(ErrorKind::Parameter, "estimate_bases: d must be >= 1");
    int clusters = 0;
    for (int l : labels) {
        if (l < 0) fail(ErrorKind::Labeling, "estimate_bases: negative label");
        clusters = std::max(clusters, l + 1);
    }
    if (clusters < 2) fail(ErrorKind::Parameter, "estimate_bases: need at least two clusters");

    ClusterModel model;
    model.requested_dim = d;
    model.means = Matrix::Zero(x.rows(), clusters);
    model.bases.resize(static_cast<std::size_t>(clusters));
    for (int c = 0; c < clusters; ++c) {
        std::vector<Eigen::Index> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) members.push_back(static_cast<Eigen::Index>(i));
        if (members.empty()) {
            fail(ErrorKind::Labeling, "estimate_bases: cluster " + std::to_string(c) + " is empty");
        }
        Matrix part(x.rows(), static_cast<Eigen::Index>(members.size()));
        for (std::size_t k = 0; k < members.size(); ++k) part.col(static_cast<Eigen::Index>(k)) = x.col(members[k]);
        const Vector mean = part.rowwise().mean();
        model.means.col(c) = mean;
        part.colwise() -= mean;

        Eigen::BDCSVD<Matrix> svd(part, Eigen::ComputeThinU);
        const Vector& s = svd.singularValues();
        const double cutoff = std::max(1e-12, 1e-10 * (s.size() > 0 ? s(0) : 0.0));
        int rank = 0;
        while (rank < s.size() && s(rank) > cutoff) ++rank;
        const int keep = std::min({d, rank, static_cast<int>(members.size()) - 1});
        if (keep < d) {
            model.warnings.push_back("cluster " + std::to_string(c) + ": d reduced from " +
                                     std::to_string(d) + " to " + std::to_string(keep) + " (" +
                                     std::to_string(members.size()) + " points, rank " +
                                     std::to_string(rank) + ")");
        }
        model.bases[static_cast<std::size_t>(c)] = svd.matrixU().leftCols(std::max(keep, 0));
    }
    return model;
}

Vector subspace_distances(const Vector& x, const ClusterModel& model) {
    if (x.size() != model.dim()) fail(ErrorKind::Shape, "assign_oos: dimension mismatch");
    Vector dist(model.clusters());
    for (int c = 0; c < model.clusters(); ++c) {
        const Vector centered = x - model.means.col(c);
        const Matrix& u = model.bases[static_cast<std::size_t>(c)];
        dist(c) = u.cols() > 0 ? (centered - u * (u.transpose() * centered)).norm() : centered.norm();
    }
    return dist;
}

Assignment assign_oos(const Vector& x, const ClusterModel& model) {
    const Vector dist = subspace_distances(x, model);
    Assignment best;
    best.distance = dist(0);
    for (int c = 1; c < dist.size(); ++c) {
        if (dist(c) < best.distance) {
            best.distance = dist(c);
            best.label = c;
        }
    }
    return best;
}

Labels assign_oos(const Matrix& x, const ClusterModel& model) {
    Labels out;
    out.reserve(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.push_back(assign_oos(Vector(x.col(j)), model).label);
    return out;
}

Assignment assign_oos_multiview(const std::vector<Vector>& views, const std::vector<ClusterModel>& models) {
    if (views.size() != models.size() || views.empty())
        fail(ErrorKind::Consistency, "assign_oos_multiview: view count mismatch");
    for (const auto& m : models)
        if (m.clusters() != models.front().clusters())
            fail(ErrorKind::Consistency, "assign_oos_multiview: cluster count differs across views");
    Assignment best;
    for (std::size_t v = 0; v < views.size(); ++v) {
        Assignment a = assign_oos(views[v], models[v]);
        a.view = static_cast<int>(v);
        if (v == 0 || a.distance < best.distance) best = a;
    }
    return best;
}

Labels assign_oos_multiview(const std::vector<Matrix>& views, const std::vector<ClusterModel>& models) {
    if (views.empty()) fail(ErrorKind::Consistency, "assign_oos_multiview: no views");
    Labels out;
    for (Eigen::Index j = 0; j < views.front().cols(); ++j) {
        std::vector<Vector> pts;
        for (const auto& v : views) {
            if (v.cols() != views.front().cols()) fail(ErrorKind::Consistency, "views differ in N");
            pts.emplace_back(v.col(j));
        }
        out.push_back(assign_oos_multiview(pts, models).label);
    }
    return out;
}

namespace {

void require_orthonormal(const Matrix& u, const char* which) {
    const Matrix gram = u.transpose() * u;
    if ((gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() > 1e-8) {
        fail(ErrorKind::Precondition, std::string("subspace_affinity: ") + which +
                                          " does not have orthonormal columns");
    }
}

}  // namespace

double subspace_affinity(const Matrix& u1, const Matrix& u2) {
    if (u1.rows() != u2.rows()) fail(ErrorKind::Shape, "subspace_affinity: ambient dimensions differ");
    const Eigen::Index dmin = std::min(u1.cols(), u2.cols());
    if (dmin == 0) fail(ErrorKind::Precondition, "subspace_affinity: empty basis");
    require_orthonormal(u1, "U1");
    require_orthonormal(u2, "U2");
    // sum of squared singular values = squared Frobenius norm
    const double s2 = (u1.transpose() * u2).squaredNorm();
    return std::clamp(std::sqrt(s2 / static_cast<double>(dmin)), 0.0, 1.0);
}

double average_affinity(const ClusterModel& model) {
    const int c = model.clusters();
    if (c < 2) fail(ErrorKind::Parameter, "average_affinity: need at least two clusters");
    double sum = 0.0;
    for (int i = 0; i < c - 1; ++i)
        for (int j = i + 1; j < c; ++j)
            sum += subspace_affinity(model.bases[static_cast<std::size_t>(i)],
                                     model.bases[static_cast<std::size_t>(j)]);
    return 2.0 * sum / (static_cast<double>(c) * (c - 1));
}

AngleResult mean_principal_angle(double affinity) {
    AngleResult r;
    if (!std::isfinite(affinity) || affinity < -1e-9 || affinity > 1.0 + 1e-9)
        fail(ErrorKind::Precondition, "mean_principal_angle: affinity outside [0, 1]");
    if (affinity < 0.0 || affinity > 1.0) {
        r.clamped = true;
        affinity = std::clamp(affinity, 0.0, 1.0);
    }
    r.degrees = std::acos(affinity) * 180.0 / std::numbers::pi;
    return r;
}

}  // namespace wpsc
