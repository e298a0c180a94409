#include "wpsc/solvers.hpp"

#include "wpsc/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace wpsc {

namespace {

Matrix soft_threshold(const Matrix& m, double tau) {
    return m.unaryExpr([tau](double v) {
        const double a = std::abs(v) - tau;
        return a > 0.0 ? std::copysign(a, v) : 0.0;
    });
}

void require_columns(const Matrix& x, int min_cols, const char* who) {
    if (x.cols() < min_cols) {
        fail(ErrorKind::Precondition, std::string(who) + ": need at least " +
                                          std::to_string(min_cols) + " points");
    }
    if (!x.allFinite()) fail(ErrorKind::Precondition, std::string(who) + ": non-finite input");
}

}  // namespace

double ssc_mu(const Matrix& x) {
    const Matrix g = (x.transpose() * x).cwiseAbs();
    double mu = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < g.cols(); ++i) {
        double best = 0.0;
        for (Eigen::Index j = 0; j < g.rows(); ++j)
            if (j != i) best = std::max(best, g(j, i));
        mu = std::min(mu, best);
    }
    return mu;
}

SscResult solve_ssc(const Matrix& x, const SscOptions& opt) {
    require_columns(x, 2, "ssc");
    if (!(opt.alpha > 0.0)) fail(ErrorKind::Parameter, "ssc: alpha must be positive");
    if (opt.mode == SscMode::Outlier && !(opt.outlier_weight > 0.0))
        fail(ErrorKind::Parameter, "ssc: outlier_weight must be positive");
    const Eigen::Index n = x.cols();
    const double mu_e = ssc_mu(x);
    if (!(mu_e > 0.0)) {
        fail(ErrorKind::DegenerateData, "ssc: every column is orthogonal to all others (mu_e = 0)");
    }
    SscResult res;
    res.lambda_e = opt.alpha / mu_e;
    const double lambda = res.lambda_e;
    const double rho = lambda;
    const bool outlier = opt.mode == SscMode::Outlier;

    const Matrix gram = x.transpose() * x;
    Matrix system = lambda * gram + rho * Matrix::Identity(n, n);
    if (opt.affine) system.array() += rho;
    const Matrix inverse = system.llt().solve(Matrix::Identity(n, n));

    Matrix c = Matrix::Zero(n, n);
    Matrix dual = Matrix::Zero(n, n);
    Eigen::RowVectorXd dual_affine = Eigen::RowVectorXd::Zero(n);
    Matrix e = outlier ? Matrix::Zero(x.rows(), n) : Matrix();
    Matrix z;

    auto objective = [&](const Matrix& coeffs) {
        Matrix r = x - x * coeffs;
        if (outlier) r -= e;
        double f = coeffs.cwiseAbs().sum() + 0.5 * lambda * r.squaredNorm();
        if (outlier) f += opt.outlier_weight * e.cwiseAbs().sum();
        return f;
    };

    for (int it = 1; it <= opt.max_iter; ++it) {
        Matrix rhs = outlier ? Matrix(lambda * (x.transpose() * (x - e))) : Matrix(lambda * gram);
        rhs += rho * c - dual;
        if (opt.affine) {
            // rho * 1 1^T - 1 * dual_affine
            rhs.array() += rho;
            rhs.rowwise() -= dual_affine;
        }
        z = inverse * rhs;

        c = soft_threshold(z + dual / rho, 1.0 / rho);
        c.diagonal().setZero();

        if (outlier) e = soft_threshold(x - x * z, opt.outlier_weight / lambda);

        const Matrix gap = z - c;
        dual += rho * gap;
        double residual = gap.cwiseAbs().maxCoeff();
        if (opt.affine) {
            const Eigen::RowVectorXd affine_gap = z.colwise().sum().array() - 1.0;
            dual_affine += rho * affine_gap;
            residual = std::max(residual, affine_gap.cwiseAbs().maxCoeff());
        }
        res.objective.push_back(objective(c));
        res.iterations = it;
        res.residual = residual;
        if (residual < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.z = std::move(c);
    if (outlier) res.e = std::move(e);
    return res;
}

Matrix l21_shrink_columns(const Matrix& m, double tau) {
    Matrix out = m;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double norm = m.col(j).norm();
        const double scale = norm > tau ? 1.0 - tau / norm : 0.0;
        out.col(j) *= scale;
    }
    return out;
}

Matrix l21_shrink_rows(const Matrix& m, double tau) {
    Matrix out = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        const double scale = norm > tau ? 1.0 - tau / norm : 0.0;
        out.row(i) *= scale;
    }
    return out;
}

Matrix singular_value_threshold(const Matrix& m, double tau, double* nuclear_norm) {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = (svd.singularValues().array() - tau).cwiseMax(0.0);
    if (nuclear_norm) *nuclear_norm = s.sum();
    Eigen::Index keep = 0;
    while (keep < s.size() && s(keep) > 0.0) ++keep;
    if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
    return svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() *
           svd.matrixV().leftCols(keep).transpose();
}

LrrResult solve_lrr(const Matrix& x, const LrrOptions& opt) {
    require_columns(x, 2, "lrr");
    if (!(opt.lambda > 0.0)) fail(ErrorKind::Parameter, "lrr: lambda must be positive");
    const Eigen::Index n = x.cols();
    const Matrix gram = x.transpose() * x;
    const Matrix inverse = (gram + Matrix::Identity(n, n)).llt().solve(Matrix::Identity(n, n));

    Matrix z = Matrix::Zero(n, n);
    Matrix j = Matrix::Zero(n, n);
    Matrix e = Matrix::Zero(x.rows(), n);
    Matrix y1 = Matrix::Zero(x.rows(), n);
    Matrix y2 = Matrix::Zero(n, n);
    double mu = opt.mu0;
    LrrResult res;
    for (int it = 1; it <= opt.max_iter; ++it) {
        double nuclear = 0.0;
        j = singular_value_threshold(z + y2 / mu, 1.0 / mu, &nuclear);
        z = inverse * (x.transpose() * (x - e) + j + (x.transpose() * y1 - y2) / mu);
        const Matrix xz = x * z;
        e = l21_shrink_columns(x - xz + y1 / mu, opt.lambda / mu);

        const Matrix leq1 = x - xz - e;
        const Matrix leq2 = z - j;
        double l21 = 0.0;
        for (Eigen::Index c = 0; c < e.cols(); ++c) l21 += e.col(c).norm();
        res.objective.push_back(nuclear + opt.lambda * l21);
        res.iterations = it;
        res.residual = std::max(leq1.cwiseAbs().maxCoeff(), leq2.cwiseAbs().maxCoeff());
        if (res.residual < opt.tol) {
            res.z = std::move(z);
            res.e = std::move(e);
            return res;
        }
        y1 += mu * leq1;
        y2 += mu * leq2;
        mu = std::min(opt.mu_max, mu * opt.rho);
    }
    throw ConvergenceError("lrr: no convergence after " + std::to_string(opt.max_iter) +
                               " iterations (residual " + std::to_string(res.residual) + ")",
                           res.iterations, (x - x * z - e).cwiseAbs().maxCoeff(),
                           (z - j).cwiseAbs().maxCoeff());
}

Matrix solve_nsn(const Matrix& x, int k, int d_max) {
    require_columns(x, 2, "nsn");
    const Eigen::Index n = x.cols();
    if (d_max < 1 || d_max > k || k >= n) {
        fail(ErrorKind::Parameter, "nsn: need 1 <= d_max <= k < N");
    }
    Matrix adjacency = Matrix::Zero(n, n);
    std::vector<double> proj2(static_cast<std::size_t>(n));
    std::vector<char> taken(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(proj2.begin(), proj2.end(), 0.0);
        std::fill(taken.begin(), taken.end(), 0);
        taken[static_cast<std::size_t>(i)] = 1;
        Matrix basis(x.rows(), d_max);
        int dim = 0;
        auto extend = [&](Eigen::Index col) {
            Vector u = x.col(col);
            if (dim > 0) u -= basis.leftCols(dim) * (basis.leftCols(dim).transpose() * u);
            const double norm = u.norm();
            if (norm <= 1e-12) return;
            u /= norm;
            basis.col(dim++) = u;
            const Vector p = x.transpose() * u;
            for (Eigen::Index m = 0; m < n; ++m) proj2[static_cast<std::size_t>(m)] += p(m) * p(m);
        };
        extend(i);
        for (int step = 1; step <= k; ++step) {
            Eigen::Index best = -1;
            double best_val = -1.0;
            for (Eigen::Index m = 0; m < n; ++m) {
                if (taken[static_cast<std::size_t>(m)]) continue;
                if (proj2[static_cast<std::size_t>(m)] > best_val) {
                    best_val = proj2[static_cast<std::size_t>(m)];
                    best = m;
                }
            }
            taken[static_cast<std::size_t>(best)] = 1;
            adjacency(best, i) = 1.0;
            if (step < d_max) extend(best);
        }
    }
    Matrix w = adjacency.cwiseMax(adjacency.transpose());
    w.diagonal().setZero();
    return w;
}

Matrix solve_rtsc(const Matrix& x, int q) {
    require_columns(x, 2, "rtsc");
    const Eigen::Index n = x.cols();
    if (q < 1 || q >= n) fail(ErrorKind::Parameter, "rtsc: need 1 <= q < N");
    const Matrix g = (x.transpose() * x).cwiseAbs().cwiseMin(1.0);
    Matrix w = Matrix::Zero(n, n);
    std::vector<Eigen::Index> order;
    for (Eigen::Index i = 0; i < n; ++i) {
        order.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        // Smallest angle first; arccos is decreasing so compare angles directly
        // to keep ties exact.
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return std::acos(g(a, i)) < std::acos(g(b, i));
        });
        for (int t = 0; t < q; ++t) {
            const Eigen::Index j = order[static_cast<std::size_t>(t)];
            w(j, i) = g(j, i);
        }
    }
    Matrix sym = w.cwiseMax(w.transpose());
    sym.diagonal().setZero();
    return sym;
}

const char* to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::SSC: return "SSC";
        case SolverKind::LRR: return "LRR";
        case SolverKind::NSN: return "NSN";
        case SolverKind::RTSC: return "RTSC";
    }
    return "?";
}

SolverKind solver_kind_from_string(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "SSC") return SolverKind::SSC;
    if (up == "LRR") return SolverKind::LRR;
    if (up == "NSN") return SolverKind::NSN;
    if (up == "RTSC") return SolverKind::RTSC;
    fail(ErrorKind::Config, "unknown solver '" + name + "'");
}

std::optional<double> SolverSpec::optional_number(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::Parameter, std::string(to_string(kind)) + ": parameter '" + key +
                                       "' is not a number: '" + it->second + "'");
    }
}

double SolverSpec::number(const std::string& key) const {
    auto v = optional_number(key);
    if (!v) fail(ErrorKind::Parameter, std::string(to_string(kind)) + ": missing parameter '" + key + "'");
    return *v;
}

void SolverSpec::validate() const {
    if (!(tol > 0.0) || max_iter < 0) fail(ErrorKind::Parameter, "solver: tol and max_iter must be positive");
    switch (kind) {
        case SolverKind::SSC: ssc(); break;
        case SolverKind::LRR: lrr(); break;
        case SolverKind::NSN: {
            const double k = number("k");
            const double d_max = number("d_max");
            if (k < 1 || d_max < 1 || d_max > k || k != std::floor(k) || d_max != std::floor(d_max))
                fail(ErrorKind::Parameter, "NSN: need integer 1 <= d_max <= k");
            break;
        }
        case SolverKind::RTSC: {
            const double q = number("q");
            if (q < 1 || q != std::floor(q)) fail(ErrorKind::Parameter, "RTSC: q must be a positive integer");
            break;
        }
    }
}

SscOptions SolverSpec::ssc() const {
    SscOptions o;
    o.alpha = number("alpha");
    if (!(o.alpha > 0.0)) fail(ErrorKind::Parameter, "SSC: alpha must be positive");
    if (auto it = params.find("mode"); it != params.end()) {
        if (it->second == "noise") o.mode = SscMode::Noise;
        else if (it->second == "outlier") o.mode = SscMode::Outlier;
        else fail(ErrorKind::Parameter, "SSC: mode must be 'noise' or 'outlier'");
    }
    if (auto it = params.find("affine"); it != params.end()) {
        const auto& v = it->second;
        if (v == "1" || v == "true") o.affine = true;
        else if (v == "0" || v == "false") o.affine = false;
        else fail(ErrorKind::Parameter, "SSC: affine must be a boolean");
    }
    if (auto w = optional_number("outlier_weight")) {
        if (!(*w > 0.0)) fail(ErrorKind::Parameter, "SSC: outlier_weight must be positive");
        o.outlier_weight = *w;
    }
    o.tol = tol;
    if (max_iter > 0) o.max_iter = max_iter;
    return o;
}

LrrOptions SolverSpec::lrr() const {
    LrrOptions o;
    o.lambda = number("lambda");
    if (!(o.lambda > 0.0)) fail(ErrorKind::Parameter, "LRR: lambda must be positive");
    o.tol = tol;
    if (max_iter > 0) o.max_iter = max_iter;
    return o;
}

SolverOutput run_solver(const Matrix& x, const SolverSpec& spec) {
    spec.validate();
    SolverOutput out;
    switch (spec.kind) {
        case SolverKind::SSC: {
            auto r = solve_ssc(x, spec.ssc());
            out.iterations = r.iterations;
            out.residual = r.residual;
            out.representation = std::move(r.z);
            break;
        }
        case SolverKind::LRR: {
            auto r = solve_lrr(x, spec.lrr());
            out.iterations = r.iterations;
            out.residual = r.residual;
            out.representation = std::move(r.z);
            break;
        }
        case SolverKind::NSN:
            out.affinity = solve_nsn(x, static_cast<int>(spec.number("k")),
                                     static_cast<int>(spec.number("d_max")));
            break;
        case SolverKind::RTSC:
            out.affinity = solve_rtsc(x, static_cast<int>(spec.number("q")));
            break;
    }
    return out;
}

}  // namespace wpsc
