#pragma once

#include "wpsc/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace wpsc {

/// Mode sizes of the 5-way tensor Y (I1 = I3 = a, I2 = I4 = q, I5 = views)
/// and the common bond rank R of both isometries.
struct MeraShape {
    int a = 0;
    int q = 0;
    int views = 1;
    int rank = 1;

    int n() const { return a * q; }
    /// I1*I2 (= N): rows of the W1 unfolding.
    int left_dim() const { return a * q; }
    /// I3*I4*I5 (= N*V): rows of the W2 unfolding.
    int right_dim() const { return a * q * views; }
    /// I2*I3: side of the square disentangler unfolding.
    int disentangler_dim() const { return q * a; }
    void validate() const;
};

/// Dense 5-way tensor, column-major over (i1, i2, i3, i4, i5):
/// flat = i1 + I1*(i2 + I2*(i3 + I3*(i4 + I4*i5))).
/// Read as a matrix this is the (I1 I2) x (I3 I4 I5) unfolding.
struct Tensor5 {
    MeraShape shape;
    Vector data;

    double& operator()(int i1, int i2, int i3, int i4, int i5);
    double operator()(int i1, int i2, int i3, int i4, int i5) const;
    Eigen::Map<const Matrix> unfolding() const;
    Eigen::Map<Matrix> unfolding();
    double norm() const { return data.norm(); }
};

/// MERA factors stored as their unfoldings:
///   w1: (I1 I2) x R, row i1 + I1*i2                     (isometry)
///   w2: (I3 I4 I5) x R, row i3 + I3*(i4 + I4*i5)        (isometry)
///   u1: (I2 I3) x (I2 I3), row i2 + I2*i3 (output legs),
///       column i2' + I2*i3' (legs joined to W1 / W2)     (orthogonal)
///   b:  R x R top core
struct MeraFactors {
    Matrix w1;
    Matrix w2;
    Matrix u1;
    Matrix b;

    /// max |W^T W - I| over both isometries and |U^T U - I| for the disentangler.
    double isometry_defect() const;
};

/// Self-representation tensor Z (N x N x V) as V slices in view order.
struct SelfRepTensor {
    std::vector<Matrix> slices;
    int n() const { return slices.empty() ? 0 : static_cast<int>(slices.front().rows()); }
    int views() const { return static_cast<int>(slices.size()); }
};

/// Divisor pair (a, q), a * q = n, a <= q, q - a minimal. No-grid error when
/// n is prime (or n < 4).
std::pair<int, int> choose_grid(int n);

/// Row index n -> (i1, i2) by n = i1 + I1*i2, column index m -> (i3, i4) by
/// m = i3 + I3*i4, slice v -> i5.
Tensor5 reshape_to_5d(const SelfRepTensor& z, const MeraShape& shape);
SelfRepTensor reshape_from_5d(const Tensor5& y);

/// Layer tensor C = U1 x_{I2} W1 x_{I3} W2 contracted with B over (R1, R2).
Tensor5 mera_contract(const MeraFactors& factors, const MeraShape& shape);

/// Top core B = Y contracted with the layer tensor over all five physical modes.
Matrix mera_top_core(const Tensor5& y, const MeraFactors& factors);

struct MeraFitOptions {
    int rank = 2;
    double tol = 1e-8;
    int max_sweeps = 50;
};

struct MeraFitTrace {
    double initial_error = 0.0;     ///< ||Y - Yhat|| after truncated-SVD initialization
    std::vector<double> errors;     ///< after every sweep
    std::vector<double> isometry_defects;  ///< after every sweep
    int sweeps = 0;
};

/// Alternating fit of min ||Y - f(B, W1, W2, U1)||_F. Initialization: W1, W2
/// from the truncated SVD of the (I1 I2) x (I3 I4 I5) unfolding, U1 = I. Each
/// sweep: Procrustes updates of U1, W1, W2 followed by the optimal top core.
/// Stops when the relative improvement drops below tol.
MeraFactors mera_fit(const Tensor5& y, const MeraFitOptions& options, MeraFitTrace* trace = nullptr);

/// Continues fitting from `start` for up to `sweeps` sweeps.
MeraFactors mera_refine(const Tensor5& y, MeraFactors start, int sweeps, double tol,
                        MeraFitTrace* trace = nullptr);

struct MeraMvscOptions {
    double lambda = 1e-4;
    int rank = 3;
    double tol = 1e-6;
    int max_iter = 200;
    double mu0 = 1e-4;
    double rho = 1.5;
    double mu_max = 1e10;
    /// MERA sweeps per outer iteration (warm-started).
    int fit_sweeps = 2;
    std::uint64_t seed = 0;
};

struct MeraIteration {
    int iteration = 0;
    std::vector<double> view_residuals;  ///< ||X^v - X^v Z^v - E^v||_inf
    double consensus_residual = 0.0;     ///< ||Z - f(B, W1, W2, U1)||_inf
    double fit_error = 0.0;              ///< relative MERA fit error of the last G update
    double mu = 0.0;
};

struct MeraMvscResult {
    SelfRepTensor z;           ///< per-view self-representation
    SelfRepTensor z_hat;       ///< MERA reconstruction (reshaped Yhat)
    std::vector<Matrix> e;     ///< per-view error terms
    MeraFactors factors;
    MeraShape shape;
    std::vector<MeraIteration> trace;
    bool converged = false;
    int iterations = 0;
};

/// Multi-view self-representation with the low-rank MERA consensus:
///   min sum_v lambda ||E^v||_{2,1}  s.t. X^v = X^v Z^v + E^v,  Z = f(B, W1, W2, U1)
/// by inexact ALM. ||.||_{2,1} acts on rows. Non-convergence is reported in
/// the result rather than thrown.
MeraMvscResult mera_mvsc(const std::vector<Matrix>& views, const MeraMvscOptions& options);

/// Element-wise mean over the view mode.
Matrix unify_views(const SelfRepTensor& z);

/// CSV: iteration,residual_<v>...,consensus_residual,fit_error,mu
std::string mera_trace_csv(const std::vector<MeraIteration>& trace);

}  // namespace wpsc
