#pragma once

#include "wpsc/types.hpp"

#include <cstdint>

namespace wpsc {

/// W = (|Z| + |Z|^T) / 2 with zero diagonal.
Matrix affinity_from_representation(const Matrix& z);

/// Column-wise: keep the d largest-magnitude entries, zero the rest. Ties go
/// to the smaller row index.
Matrix ipd_threshold(const Matrix& z, int d);

/// L = I - D^{-1/2} W D^{-1/2}; degrees below 1e-12 are floored at 1e-12.
Matrix normalized_laplacian(const Matrix& w);

struct KMeansOptions {
    int restarts = 20;
    int max_iter = 300;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    Labels labels;
    Matrix centroids;  ///< k x dim
    double inertia = 0.0;
};

/// Lloyd's algorithm on the rows of `points`, k-means++ seeding. Restart r
/// uses seed + r; the lowest inertia wins (first on ties). An emptied cluster
/// takes the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, int k, const KMeansOptions& options = {});

/// Symmetric-normalized spectral clustering: eigenvectors of the C smallest
/// eigenvalues of L, rows normalized (zero rows stay zero), then k-means.
Labels spectral_clustering(const Matrix& w, int clusters, std::uint64_t seed = 0);

/// Throws unless W is square, finite, symmetric (1e-12), nonnegative, zero diagonal.
void validate_affinity(const Matrix& w);

}  // namespace wpsc
