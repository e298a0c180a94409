#pragma once

#include "wpsc/types.hpp"

#include <string>
#include <vector>

namespace wpsc {

/// Per-cluster affine model: points of cluster c are approximated by
/// means.col(c) + span(bases[c]).
struct ClusterModel {
    Matrix means;                  ///< D x C
    std::vector<Matrix> bases;     ///< D x d_c, orthonormal columns
    int requested_dim = 0;         ///< common d asked for
    std::vector<std::string> warnings;

    int clusters() const { return static_cast<int>(bases.size()); }
    int dim() const { return static_cast<int>(means.rows()); }
};

/// Centers every cluster at its mean and keeps the first d left singular
/// vectors. A cluster whose centered matrix has rank < d (too few points or
/// repeated points) keeps only its numerical rank, with a warning.
ClusterModel estimate_bases(const Matrix& x, const Labels& labels, int d);

/// ||x - mean_c - U_c U_c^T (x - mean_c)||_2 for every cluster.
Vector subspace_distances(const Vector& x, const ClusterModel& model);

struct Assignment {
    int label = 0;
    double distance = 0.0;
    int view = 0;
};

/// argmin over clusters of the point-to-subspace distance; ties go to the
/// smallest cluster index.
Assignment assign_oos(const Vector& x, const ClusterModel& model);
Labels assign_oos(const Matrix& x, const ClusterModel& model);

/// Per view best cluster, then the label of the view with the globally
/// smallest distance. Ties: earlier view, then smaller cluster index.
Assignment assign_oos_multiview(const std::vector<Vector>& views, const std::vector<ClusterModel>& models);
Labels assign_oos_multiview(const std::vector<Matrix>& views, const std::vector<ClusterModel>& models);

/// sqrt(sum_i sigma_i(U1^T U2)^2 / min(d1, d2)); columns must be orthonormal (1e-8).
double subspace_affinity(const Matrix& u1, const Matrix& u2);

/// Mean pairwise affinity over the C(C-1)/2 unordered cluster pairs.
double average_affinity(const ClusterModel& model);

struct AngleResult {
    double degrees = 0.0;
    bool clamped = false;
};

/// arccos(affinity) in degrees. Inputs within 1e-9 outside [0, 1] are
/// clamped (flagged), anything further is a precondition error.
AngleResult mean_principal_angle(double affinity);

}  // namespace wpsc
