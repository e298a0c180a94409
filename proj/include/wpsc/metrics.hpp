#pragma once

#include "wpsc/types.hpp"

#include <span>
#include <vector>

namespace wpsc {

struct MetricsReport {
    double acc = 0.0;
    double nmi = 0.0;
    double rand = 0.0;
    double f_score = 0.0;
    double purity = 0.0;
};

/// Counts n(t, p) of points with truth label t and predicted label p.
Eigen::MatrixXi contingency(std::span<const int> truth, std::span<const int> pred);

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn-Munkres,
/// O(n^3)). Returns assignment[row] = column.
std::vector<int> hungarian_min_cost(const Matrix& cost);

/// Best label bijection match fraction; rectangular tables are zero-padded.
double clustering_accuracy(std::span<const int> truth, std::span<const int> pred);
/// I(T;P) / sqrt(H(T) H(P)); zero when either entropy vanishes.
double normalized_mutual_information(std::span<const int> truth, std::span<const int> pred);
/// Fraction of agreeing pairs (plain Rand index).
double rand_index(std::span<const int> truth, std::span<const int> pred);
/// Pairwise F-score, TP = pairs grouped together in both labelings.
double pairwise_f_score(std::span<const int> truth, std::span<const int> pred);
double purity(std::span<const int> truth, std::span<const int> pred);

MetricsReport evaluate(std::span<const int> truth, std::span<const int> pred);

/// Two-sided Wilcoxon signed-rank test on paired samples: zero differences
/// dropped, average ranks for ties, normal approximation with tie and
/// continuity corrections. All-zero differences give p = 1.
double wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace wpsc
