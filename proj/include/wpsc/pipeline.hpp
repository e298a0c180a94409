#pragma once

#include "wpsc/dataset.hpp"
#include "wpsc/mera.hpp"
#include "wpsc/solvers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wpsc {

/// solver -> optional IPD thresholding -> affinity -> spectral clustering.
struct PipelineConfig {
    SolverSpec solver;
    int clusters = 2;
    /// Keep this many largest coefficients per column before building W.
    std::optional<int> ipd_dim;
    std::uint64_t seed = 0;
};

struct PipelineResult {
    Labels labels;
    Matrix affinity;
    int iterations = 0;
    double residual = 0.0;
};

/// Columns are unit-normalized first (zero columns are an error).
PipelineResult run_single_view(const Matrix& x, const PipelineConfig& config);

/// View order of the five-view data set: original, then level-1 subbands.
inline const std::vector<std::string>& five_view_paths() {
    static const std::vector<std::string> paths{"", "A", "H", "V", "D"};
    return paths;
}
/// "O" for the original data, otherwise the subband path.
std::string view_name(const std::string& path);

/// X^O, X^A, X^H, X^V, X^D, each column-normalized.
std::vector<Matrix> five_views(const Dataset& ds);

struct MeraPipelineConfig {
    MeraMvscOptions mera;
    int clusters = 2;
    std::optional<int> ipd_dim;
    std::uint64_t seed = 0;
};

struct MeraPipelineResult {
    Labels labels;
    Matrix unified;
    MeraMvscResult solver;
};

/// Five-view MERA self-representation, view averaging, spectral clustering.
MeraPipelineResult run_wp_mera(const Dataset& ds, const MeraPipelineConfig& config);
MeraPipelineResult run_mera_views(const std::vector<Matrix>& views, const MeraPipelineConfig& config);

}  // namespace wpsc
