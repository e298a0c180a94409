#pragma once

#include "wpsc/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wpsc {

// ---------------------------------------------------------------------------
// Sparse subspace clustering

enum class SscMode { Noise, Outlier };

struct SscOptions {
    double alpha = 10.0;
    SscMode mode = SscMode::Noise;
    bool affine = false;
    /// Weight of the entrywise l1 error term in outlier mode.
    double outlier_weight = 1.0;
    double tol = 1e-6;
    int max_iter = 200;
};

struct SscResult {
    Matrix z;                        ///< N x N, exact zero diagonal
    Matrix e;                        ///< D x N error term (outlier mode), else empty
    double lambda_e = 0.0;           ///< alpha / mu_e
    int iterations = 0;
    double residual = 0.0;           ///< last primal residual (inf-norm)
    bool converged = false;
    std::vector<double> objective;   ///< per-iteration ||C||_1 + data term at the sparse iterate
};

/// min ||C||_1 + (lambda_e/2) ||X - XC||_F^2  s.t. diag(C) = 0 [, 1^T C = 1^T]
/// by ADMM on the split Z = C with penalty rho = lambda_e held fixed, where
/// lambda_e = alpha / mu_e and mu_e = min_i max_{j != i} |x_i^T x_j|.
/// Outlier mode adds outlier_weight * ||E||_1 with X - XC - E in the data term.
SscResult solve_ssc(const Matrix& x, const SscOptions& options = {});

/// min_i max_{j != i} |x_i^T x_j|
double ssc_mu(const Matrix& x);

// ---------------------------------------------------------------------------
// Low-rank representation

struct LrrOptions {
    double lambda = 0.1;
    double tol = 1e-6;
    int max_iter = 1000;
    double mu0 = 1e-3;
    double rho = 1.1;
    double mu_max = 1e10;
};

struct LrrResult {
    Matrix z;
    Matrix e;
    int iterations = 0;
    double residual = 0.0;           ///< max(||X - XZ - E||_inf, ||Z - J||_inf)
    std::vector<double> objective;   ///< ||J||_* + lambda ||E||_{2,1} per iteration
};

/// min ||Z||_* + lambda ||E||_{2,1}  s.t. X = XZ + E, inexact ALM with the
/// auxiliary split Z = J. Throws ConvergenceError when max_iter is exhausted.
LrrResult solve_lrr(const Matrix& x, const LrrOptions& options = {});

/// Row-wise (axis = rows) or column-wise l2,1 shrinkage with threshold tau.
Matrix l21_shrink_columns(const Matrix& m, double tau);
Matrix l21_shrink_rows(const Matrix& m, double tau);
/// Singular value thresholding: U max(S - tau, 0) V^T. Returns the nuclear
/// norm of the result through `nuclear_norm` when non-null.
Matrix singular_value_threshold(const Matrix& m, double tau, double* nuclear_norm = nullptr);

// ---------------------------------------------------------------------------
// Neighborhood-based backends (return affinities directly)

/// Greedy nearest-subspace neighbors: for each point grow an orthonormal span
/// from x_i, repeatedly adding the point with the largest projection norm onto
/// the span (the span stops growing at d_max dimensions). Binary k-neighbor
/// matrix, OR-symmetrized, zero diagonal.
Matrix solve_nsn(const Matrix& x, int k, int d_max);

/// q nearest neighbors under s(x_i, x_j) = arccos(|<x_i, x_j>|), edge weight
/// |<x_i, x_j>|, symmetrized by max, zero diagonal.
Matrix solve_rtsc(const Matrix& x, int q);

// ---------------------------------------------------------------------------
// Generic solver specification

enum class SolverKind { SSC, LRR, NSN, RTSC };

const char* to_string(SolverKind kind);
SolverKind solver_kind_from_string(const std::string& name);

/// kind + string parameters, validated on construction of the option structs.
/// SSC: alpha, mode (noise|outlier), affine (0|1), outlier_weight
/// LRR: lambda;  NSN: k, d_max;  RTSC: q
struct SolverSpec {
    SolverKind kind = SolverKind::SSC;
    std::map<std::string, std::string> params;
    double tol = 1e-6;
    /// 0 selects the backend default (SSC 200, LRR 1000).
    int max_iter = 0;

    double number(const std::string& key) const;
    std::optional<double> optional_number(const std::string& key) const;
    /// Throws a parameter error when required parameters are missing or invalid.
    void validate() const;
    SscOptions ssc() const;
    LrrOptions lrr() const;
};

struct SolverOutput {
    /// Self-expressive coefficients (SSC, LRR) or nullopt.
    std::optional<Matrix> representation;
    /// Affinity: for SSC/LRR filled in by the graph stage, for NSN/RTSC directly.
    std::optional<Matrix> affinity;
    int iterations = 0;
    double residual = 0.0;
};

/// Runs the backend on unit-norm columns.
SolverOutput run_solver(const Matrix& x, const SolverSpec& spec);

}  // namespace wpsc
