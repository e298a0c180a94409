#pragma once

#include "wpsc/dataset.hpp"
#include "wpsc/pipeline.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace wpsc {

/// CE = 1 - ACC of the pipeline's partition against `truth`.
double clustering_error(const Matrix& x, const Labels& truth, const PipelineConfig& pipeline);

struct SubbandScore {
    std::string path;
    double ce = 0.0;
    std::string note;  ///< set when the subband could not be clustered (CE forced to 1)
};

enum class StopReason { ParentBetter, MaxDepth };
const char* to_string(StopReason reason);

struct SelectionTrace {
    std::vector<SubbandScore> evaluated;  ///< in evaluation order
    std::string chosen;
    StopReason stopped = StopReason::MaxDepth;
};

/// Greedy best-subband descent: score the original data, then the four
/// children of the current best node; stop with the parent when it is
/// strictly better than its best child, otherwise descend until level J.
/// Children tie-break in A, H, V, D order.
using SubbandScorer = std::function<SubbandScore(const std::string& path, const Matrix& coefficients)>;
SelectionTrace select_subband(const Dataset& validation, int levels, const SubbandScorer& score);
SelectionTrace select_subband(const Dataset& validation, int levels, const PipelineConfig& pipeline);

/// Diagnostic: every node of the J-level tree plus the original, argmin CE.
SelectionTrace exhaustive_subband_scan(const Dataset& validation, int levels, const PipelineConfig& pipeline);

std::string selection_trace_csv(const SelectionTrace& trace);

using ParamSet = std::map<std::string, std::string>;

struct Grid {
    /// Cartesian product in axis order (first axis varies slowest).
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    int n_val_subsets = 10;
    int val_size_per_cluster = 10;
    std::uint64_t seed = 0;

    std::vector<ParamSet> points() const;
};

/// lambda in {1e-10, ..., 1e-1}, R in {2, ..., 20}.
Grid default_mera_grid();

struct GridRow {
    ParamSet params;
    std::vector<double> accuracies;
    double mean_acc = 0.0;
};

struct GridResult {
    ParamSet best;
    std::size_t best_index = 0;
    std::vector<GridRow> table;
};

/// Returns the ACC of one pipeline run on a validation subset.
using GridEvaluator =
    std::function<double(const Dataset& subset, const ParamSet& params, std::uint64_t seed)>;

/// Every grid point sees the same n_val_subsets stratified subsets (subset s
/// drawn with seed + s). Best = highest mean ACC, first in grid order on ties.
GridResult grid_search(const Dataset& ds, const Grid& grid, const GridEvaluator& evaluate);

/// Grid parameters override the solver parameters of `base` (keys "ipd_d"
/// and "d" set the IPD dimension).
GridEvaluator single_view_evaluator(const PipelineConfig& base);
/// Grid parameters "lambda" and "R" override `base.mera`.
GridEvaluator mera_evaluator(const MeraPipelineConfig& base);

std::string grid_table_csv(const GridResult& result);

}  // namespace wpsc
