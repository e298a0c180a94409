#include "wpsc/metrics.hpp"

#include "wpsc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wpsc {

namespace {

void check_pair(std::span<const int> truth, std::span<const int> pred) {
    if (truth.size() != pred.size()) {
        fail(ErrorKind::Consistency, "metrics: " + std::to_string(truth.size()) + " truth labels vs " +
                                         std::to_string(pred.size()) + " predictions");
    }
    if (truth.size() < 2) fail(ErrorKind::Precondition, "metrics: need at least two points");
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] < 0 || pred[i] < 0) fail(ErrorKind::Labeling, "metrics: negative label");
}

double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

Eigen::MatrixXi contingency(std::span<const int> truth, std::span<const int> pred) {
    check_pair(truth, pred);
    const int ct = *std::max_element(truth.begin(), truth.end()) + 1;
    const int cp = *std::max_element(pred.begin(), pred.end()) + 1;
    Eigen::MatrixXi table = Eigen::MatrixXi::Zero(ct, cp);
    for (std::size_t i = 0; i < truth.size(); ++i) ++table(truth[i], pred[i]);
    return table;
}

std::vector<int> hungarian_min_cost(const Matrix& cost) {
    if (cost.rows() != cost.cols()) fail(ErrorKind::Shape, "hungarian: cost must be square");
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials formulation; p[j] = row matched to column j.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) assignment[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    return assignment;
}

double clustering_accuracy(std::span<const int> truth, std::span<const int> pred) {
    const Eigen::MatrixXi table = contingency(truth, pred);
    const Eigen::Index k = std::max(table.rows(), table.cols());
    Matrix cost = Matrix::Zero(k, k);
    cost.topLeftCorner(table.rows(), table.cols()) = -table.cast<double>();
    const auto assignment = hungarian_min_cost(cost);
    long matched = 0;
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
        const int c = assignment[static_cast<std::size_t>(r)];
        if (c < table.cols()) matched += table(r, c);
    }
    return static_cast<double>(matched) / static_cast<double>(truth.size());
}

double normalized_mutual_information(std::span<const int> truth, std::span<const int> pred) {
    const Eigen::MatrixXi table = contingency(truth, pred);
    const double n = static_cast<double>(truth.size());
    const Eigen::VectorXi rows = table.rowwise().sum();
    const Eigen::RowVectorXi cols = table.colwise().sum();
    auto entropy = [n](auto counts) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < counts.size(); ++i)
            if (counts(i) > 0) {
                const double p = counts(i) / n;
                h -= p * std::log(p);
            }
        return h;
    };
    const double ht = entropy(rows);
    const double hp = entropy(cols);
    if (ht <= 0.0 || hp <= 0.0) return 0.0;
    double mi = 0.0;
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index j = 0; j < table.cols(); ++j)
            if (table(i, j) > 0) {
                const double pij = table(i, j) / n;
                mi += pij * std::log(pij * n * n / (static_cast<double>(rows(i)) * cols(j)));
            }
    return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

namespace {

struct PairCounts {
    double total = 0.0;       // C(N, 2)
    double both = 0.0;        // same cluster in truth and prediction
    double same_truth = 0.0;
    double same_pred = 0.0;
};

PairCounts pair_counts(std::span<const int> truth, std::span<const int> pred) {
    const Eigen::MatrixXi table = contingency(truth, pred);
    PairCounts pc;
    pc.total = pairs(static_cast<double>(truth.size()));
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index j = 0; j < table.cols(); ++j) pc.both += pairs(table(i, j));
    const Eigen::VectorXi rows = table.rowwise().sum();
    const Eigen::RowVectorXi cols = table.colwise().sum();
    for (Eigen::Index i = 0; i < rows.size(); ++i) pc.same_truth += pairs(rows(i));
    for (Eigen::Index j = 0; j < cols.size(); ++j) pc.same_pred += pairs(cols(j));
    return pc;
}

}  // namespace

double rand_index(std::span<const int> truth, std::span<const int> pred) {
    const PairCounts pc = pair_counts(truth, pred);
    // agreeing = both + (pairs separated in both)
    const double agree = pc.total + 2.0 * pc.both - pc.same_truth - pc.same_pred;
    return agree / pc.total;
}

double pairwise_f_score(std::span<const int> truth, std::span<const int> pred) {
    const PairCounts pc = pair_counts(truth, pred);
    if (pc.both == 0.0) return 0.0;
    const double precision = pc.both / pc.same_pred;
    const double recall = pc.both / pc.same_truth;
    return 2.0 * precision * recall / (precision + recall);
}

double purity(std::span<const int> truth, std::span<const int> pred) {
    const Eigen::MatrixXi table = contingency(truth, pred);
    long total = 0;
    for (Eigen::Index j = 0; j < table.cols(); ++j) total += table.col(j).maxCoeff();
    return static_cast<double>(total) / static_cast<double>(truth.size());
}

MetricsReport evaluate(std::span<const int> truth, std::span<const int> pred) {
    MetricsReport r;
    r.acc = clustering_accuracy(truth, pred);
    r.nmi = normalized_mutual_information(truth, pred);
    r.rand = rand_index(truth, pred);
    r.f_score = pairwise_f_score(truth, pred);
    r.purity = purity(truth, pred);
    return r;
}

double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorKind::Consistency, "wilcoxon: samples must be paired");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] - b[i] != 0.0) diffs.push_back(a[i] - b[i]);
    if (diffs.empty()) return 1.0;
    const std::size_t n = diffs.size();
    if (n < 5) fail(ErrorKind::Precondition, "wilcoxon: need at least 5 non-zero differences");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });
    std::vector<double> ranks(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (diffs[i] > 0.0) w_plus += ranks[i];
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) return 1.0;
    const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace wpsc
