#include "wpsc/mera.hpp"

#include "wpsc/error.hpp"
#include "wpsc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace wpsc {

void MeraShape::validate() const {
    if (a < 1 || q < 1 || views < 1) fail(ErrorKind::Shape, "mera shape: mode sizes must be positive");
    if (rank < 1) fail(ErrorKind::Parameter, "mera shape: rank must be >= 1");
}

namespace {

std::size_t flat_index(const MeraShape& s, int i1, int i2, int i3, int i4, int i5) {
    return static_cast<std::size_t>(i1) +
           static_cast<std::size_t>(s.a) *
               (static_cast<std::size_t>(i2) +
                static_cast<std::size_t>(s.q) *
                    (static_cast<std::size_t>(i3) +
                     static_cast<std::size_t>(s.a) *
                         (static_cast<std::size_t>(i4) + static_cast<std::size_t>(s.q) * i5)));
}

/// Regroups a tensor into the (i2 + I2*i3) x (i1 + I1*(i4 + I4*i5)) matrix the
/// disentangler acts on.
Matrix gather_disentangler_legs(const Vector& t, const MeraShape& s) {
    const int outer = s.q * s.views;  // (i4, i5) pairs
    Matrix m(s.disentangler_dim(), static_cast<Eigen::Index>(s.a) * outer);
    const double* src = t.data();
    for (int k = 0; k < outer; ++k)
        for (int i3 = 0; i3 < s.a; ++i3)
            for (int i2 = 0; i2 < s.q; ++i2)
                for (int i1 = 0; i1 < s.a; ++i1)
                    m(i2 + s.q * i3, i1 + s.a * k) =
                        *src++;
    return m;
}

Vector scatter_disentangler_legs(const Matrix& m, const MeraShape& s) {
    const int outer = s.q * s.views;
    Vector t(static_cast<Eigen::Index>(s.left_dim()) * s.right_dim());
    double* dst = t.data();
    for (int k = 0; k < outer; ++k)
        for (int i3 = 0; i3 < s.a; ++i3)
            for (int i2 = 0; i2 < s.q; ++i2)
                for (int i1 = 0; i1 < s.a; ++i1) *dst++ = m(i2 + s.q * i3, i1 + s.a * k);
    return t;
}

/// Applies a (I2 I3) x (I2 I3) operator to the (i2, i3) legs.
Vector apply_on_disentangler_legs(const Matrix& op, const Vector& t, const MeraShape& s) {
    return scatter_disentangler_legs(op * gather_disentangler_legs(t, s), s);
}

Matrix polar_factor(const Matrix& env) {
    Eigen::BDCSVD<Matrix> svd(env, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

double orthonormality_defect(const Matrix& w) {
    return (w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff();
}

Eigen::Map<const Matrix> as_unfolding(const Vector& data, const MeraShape& s) {
    return Eigen::Map<const Matrix>(data.data(), s.left_dim(), s.right_dim());
}

void check_factors(const MeraFactors& f, const MeraShape& s) {
    s.validate();
    if (f.w1.rows() != s.left_dim() || f.w1.cols() != s.rank || f.w2.rows() != s.right_dim() ||
        f.w2.cols() != s.rank || f.u1.rows() != s.disentangler_dim() ||
        f.u1.cols() != s.disentangler_dim() || f.b.rows() != s.rank || f.b.cols() != s.rank) {
        fail(ErrorKind::Shape, "mera: factor shapes do not match the declared shape");
    }
}

}  // namespace

double& Tensor5::operator()(int i1, int i2, int i3, int i4, int i5) {
    return data(static_cast<Eigen::Index>(flat_index(shape, i1, i2, i3, i4, i5)));
}

double Tensor5::operator()(int i1, int i2, int i3, int i4, int i5) const {
    return data(static_cast<Eigen::Index>(flat_index(shape, i1, i2, i3, i4, i5)));
}

Eigen::Map<const Matrix> Tensor5::unfolding() const { return as_unfolding(data, shape); }

Eigen::Map<Matrix> Tensor5::unfolding() {
    return Eigen::Map<Matrix>(data.data(), shape.left_dim(), shape.right_dim());
}

double MeraFactors::isometry_defect() const {
    return std::max({orthonormality_defect(w1), orthonormality_defect(w2), orthonormality_defect(u1)});
}

std::pair<int, int> choose_grid(int n) {
    if (n < 4) fail(ErrorKind::NoGrid, "choose_grid: N = " + std::to_string(n) + " is too small");
    int a = static_cast<int>(std::sqrt(static_cast<double>(n)));
    while ((a + 1) * (a + 1) <= n) ++a;
    while (a > 1 && n % a != 0) --a;
    if (a == 1) {
        fail(ErrorKind::NoGrid, "choose_grid: N = " + std::to_string(n) +
                                    " is prime; resize the in-sample set");
    }
    return {a, n / a};
}

Tensor5 reshape_to_5d(const SelfRepTensor& z, const MeraShape& shape) {
    shape.validate();
    if (z.views() != shape.views) fail(ErrorKind::Shape, "reshape_to_5d: view count mismatch");
    const int n = shape.n();
    Tensor5 y{shape, Vector(static_cast<Eigen::Index>(n) * n * shape.views)};
    for (int v = 0; v < shape.views; ++v) {
        const Matrix& s = z.slices[static_cast<std::size_t>(v)];
        if (s.rows() != n || s.cols() != n) fail(ErrorKind::Shape, "reshape_to_5d: slice is not N x N");
        for (int m = 0; m < n; ++m)
            for (int r = 0; r < n; ++r)
                y(r % shape.a, r / shape.a, m % shape.a, m / shape.a, v) = s(r, m);
    }
    return y;
}

SelfRepTensor reshape_from_5d(const Tensor5& y) {
    const MeraShape& s = y.shape;
    const int n = s.n();
    SelfRepTensor z;
    z.slices.assign(static_cast<std::size_t>(s.views), Matrix(n, n));
    for (int v = 0; v < s.views; ++v)
        for (int m = 0; m < n; ++m)
            for (int r = 0; r < n; ++r)
                z.slices[static_cast<std::size_t>(v)](r, m) = y(r % s.a, r / s.a, m % s.a, m / s.a, v);
    return z;
}

Tensor5 mera_contract(const MeraFactors& f, const MeraShape& shape) {
    check_factors(f, shape);
    const Matrix inner = f.w1 * f.b * f.w2.transpose();  // legs (i1, i2'), (i3', i4, i5)
    Vector flat = Eigen::Map<const Vector>(inner.data(), inner.size());
    return Tensor5{shape, apply_on_disentangler_legs(f.u1, flat, shape)};
}

Matrix mera_top_core(const Tensor5& y, const MeraFactors& f) {
    check_factors(f, y.shape);
    const Vector rotated = apply_on_disentangler_legs(f.u1.transpose(), y.data, y.shape);
    return f.w1.transpose() * as_unfolding(rotated, y.shape) * f.w2;
}

namespace {

double fit_error(const Tensor5& y, const MeraFactors& f) {
    return (y.data - mera_contract(f, y.shape).data).norm();
}

void sweep(const Tensor5& y, MeraFactors& f) {
    const MeraShape& s = y.shape;
    // Disentangler: maximize <Y, U1 T> with T = W1 B W2^T.
    {
        const Matrix inner = f.w1 * f.b * f.w2.transpose();
        const Vector t = Eigen::Map<const Vector>(inner.data(), inner.size());
        const Matrix env = gather_disentangler_legs(y.data, s) * gather_disentangler_legs(t, s).transpose();
        f.u1 = polar_factor(env);
    }
    const Vector rotated = apply_on_disentangler_legs(f.u1.transpose(), y.data, s);
    const auto y_rot = as_unfolding(rotated, s);
    f.w1 = polar_factor(y_rot * f.w2 * f.b.transpose());
    f.w2 = polar_factor(y_rot.transpose() * f.w1 * f.b);
    f.b = f.w1.transpose() * y_rot * f.w2;
}

}  // namespace

MeraFactors mera_refine(const Tensor5& y, MeraFactors f, int sweeps, double tol, MeraFitTrace* trace) {
    check_factors(f, y.shape);
    double prev = fit_error(y, f);
    if (trace) {
        if (trace->errors.empty() && trace->sweeps == 0) trace->initial_error = prev;
    }
    const double scale = y.norm();
    for (int k = 0; k < sweeps; ++k) {
        if (prev <= 1e-14 * std::max(scale, 1.0)) break;
        sweep(y, f);
        const double err = fit_error(y, f);
        if (trace) {
            trace->errors.push_back(err);
            trace->isometry_defects.push_back(f.isometry_defect());
            ++trace->sweeps;
        }
        const bool stalled = (prev - err) < tol * std::max(prev, 1e-300);
        prev = err;
        if (stalled) break;
    }
    return f;
}

MeraFactors mera_fit(const Tensor5& y, const MeraFitOptions& options, MeraFitTrace* trace) {
    MeraShape s = y.shape;
    s.rank = options.rank;
    s.validate();
    if (y.data.size() != static_cast<Eigen::Index>(s.left_dim()) * s.right_dim())
        fail(ErrorKind::Shape, "mera_fit: tensor size does not match its shape");
    if (options.rank > std::min(s.left_dim(), s.right_dim())) {
        fail(ErrorKind::Parameter, "mera_fit: R = " + std::to_string(options.rank) +
                                       " exceeds min(I1 I2, I3 I4 I5) = " +
                                       std::to_string(std::min(s.left_dim(), s.right_dim())));
    }
    Tensor5 target{s, y.data};
    Eigen::BDCSVD<Matrix> svd(Matrix(target.unfolding()), Eigen::ComputeThinU | Eigen::ComputeThinV);
    MeraFactors f;
    f.w1 = svd.matrixU().leftCols(s.rank);
    f.w2 = svd.matrixV().leftCols(s.rank);
    f.u1 = Matrix::Identity(s.disentangler_dim(), s.disentangler_dim());
    f.b = f.w1.transpose() * target.unfolding() * f.w2;
    if (trace) {
        *trace = MeraFitTrace{};
        trace->initial_error = fit_error(target, f);
    }
    return mera_refine(target, std::move(f), options.max_sweeps, options.tol, trace);
}

std::string mera_trace_csv(const std::vector<MeraIteration>& trace) {
    std::ostringstream out;
    out << "iteration";
    const std::size_t views = trace.empty() ? 0 : trace.front().view_residuals.size();
    for (std::size_t v = 0; v < views; ++v) out << ",residual_" << v;
    out << ",consensus_residual,fit_error,mu\n";
    out << std::setprecision(10);
    for (const auto& it : trace) {
        out << it.iteration;
        for (double r : it.view_residuals) out << ',' << r;
        out << ',' << it.consensus_residual << ',' << it.fit_error << ',' << it.mu << '\n';
    }
    return out.str();
}

Matrix unify_views(const SelfRepTensor& z) {
    if (z.slices.empty()) fail(ErrorKind::Shape, "unify_views: no views");
    Matrix sum = Matrix::Zero(z.slices.front().rows(), z.slices.front().cols());
    for (const auto& s : z.slices) {
        if (s.rows() != sum.rows() || s.cols() != sum.cols()) fail(ErrorKind::Shape, "unify_views: slice shapes differ");
        sum += s;
    }
    return sum / static_cast<double>(z.slices.size());
}

MeraMvscResult mera_mvsc(const std::vector<Matrix>& views, const MeraMvscOptions& opt) {
    if (views.empty()) fail(ErrorKind::Parameter, "mera_mvsc: no views");
    const int n = static_cast<int>(views.front().cols());
    for (const auto& x : views) {
        if (x.cols() != n) fail(ErrorKind::Shape, "mera_mvsc: views differ in N");
        if (!x.allFinite()) fail(ErrorKind::Precondition, "mera_mvsc: non-finite view");
    }
    if (!(opt.lambda > 0.0)) fail(ErrorKind::Parameter, "mera_mvsc: lambda must be positive");
    if (opt.max_iter < 1 || opt.fit_sweeps < 1) fail(ErrorKind::Parameter, "mera_mvsc: iteration counts must be positive");
    const auto [a, q] = choose_grid(n);
    const int nv = static_cast<int>(views.size());
    MeraShape shape{a, q, nv, opt.rank};
    shape.validate();
    if (opt.rank > n) fail(ErrorKind::Parameter, "mera_mvsc: R exceeds N");

    std::vector<Matrix> inverse;
    for (const auto& x : views) {
        const Matrix g = x.transpose() * x;
        inverse.push_back((g + Matrix::Identity(n, n)).llt().solve(Matrix::Identity(n, n)));
    }
    MeraMvscResult res;
    res.shape = shape;
    res.z.slices.assign(static_cast<std::size_t>(nv), Matrix::Zero(n, n));
    res.z_hat.slices.assign(static_cast<std::size_t>(nv), Matrix::Zero(n, n));
    res.e.assign(static_cast<std::size_t>(nv), Matrix());
    std::vector<Matrix> y1(static_cast<std::size_t>(nv)), y2(static_cast<std::size_t>(nv), Matrix::Zero(n, n));
    for (int v = 0; v < nv; ++v) {
        const auto& x = views[static_cast<std::size_t>(v)];
        res.e[static_cast<std::size_t>(v)] = Matrix::Zero(x.rows(), n);
        y1[static_cast<std::size_t>(v)] = Matrix::Zero(x.rows(), n);
    }
    bool have_factors = false;
    double mu = opt.mu0;

    for (int it = 1; it <= opt.max_iter; ++it) {
        MeraIteration rec;
        rec.iteration = it;
        // Per-view regularized least squares and row-wise l2,1 shrinkage.
        for (int v = 0; v < nv; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            const Matrix& x = views[vi];
            res.z.slices[vi] = inverse[vi] * (x.transpose() * (x - res.e[vi] + y1[vi] / mu) +
                                              res.z_hat.slices[vi] - y2[vi] / mu);
            res.e[vi] = l21_shrink_rows(x - x * res.z.slices[vi] + y1[vi] / mu, opt.lambda / mu);
        }
        // MERA consensus on Z + Y2 / mu.
        SelfRepTensor target;
        for (int v = 0; v < nv; ++v)
            target.slices.push_back(res.z.slices[static_cast<std::size_t>(v)] + y2[static_cast<std::size_t>(v)] / mu);
        const Tensor5 t5 = reshape_to_5d(target, shape);
        if (!have_factors) {
            res.factors = mera_fit(t5, MeraFitOptions{opt.rank, 1e-10, opt.fit_sweeps});
            have_factors = true;
        } else {
            res.factors = mera_refine(t5, std::move(res.factors), opt.fit_sweeps, 1e-10);
        }
        const Tensor5 g5 = mera_contract(res.factors, shape);
        const double tnorm = t5.norm();
        rec.fit_error = tnorm > 0.0 ? (t5.data - g5.data).norm() / tnorm : 0.0;
        res.z_hat = reshape_from_5d(g5);

        double worst = 0.0;
        for (int v = 0; v < nv; ++v) {
            const auto vi = static_cast<std::size_t>(v);
            const Matrix& x = views[vi];
            const Matrix leq1 = x - x * res.z.slices[vi] - res.e[vi];
            const Matrix leq2 = res.z.slices[vi] - res.z_hat.slices[vi];
            const double r1 = leq1.cwiseAbs().maxCoeff();
            rec.view_residuals.push_back(r1);
            rec.consensus_residual = std::max(rec.consensus_residual, leq2.cwiseAbs().maxCoeff());
            worst = std::max(worst, r1);
            y1[vi] += mu * leq1;
            y2[vi] += mu * leq2;
        }
        rec.mu = mu;
        res.trace.push_back(rec);
        res.iterations = it;
        if (worst < opt.tol && rec.consensus_residual < opt.tol) {
            res.converged = true;
            break;
        }
        mu = std::min(opt.mu_max, mu * opt.rho);
    }
    return res;
}

}  // namespace wpsc
