#pragma once

#include "wpsc/dataset.hpp"
#include "wpsc/error.hpp"
#include "wpsc/mera.hpp"
#include "wpsc/selection.hpp"
#include "wpsc/solvers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wpsc {

struct DatasetSource {
    std::string kind = "synthetic";  ///< synthetic | idx | pgm | bundle
    UosSpec uos;
    bool smooth = false;             ///< generate_smooth_uos instead of generate_uos
    int max_frequency = 2;
    std::string images, labels, dir, path;
    std::string class_pattern = "obj(\\d+)__";
    /// Optional stratified subset taken right after loading.
    std::optional<int> per_class;
    std::uint64_t subset_seed = 0;
    std::string name;
};

Dataset load_source(const DatasetSource& source);

enum class PipelineKind { SingleView, WpSingleView, WpMera };
const char* to_string(PipelineKind kind);
PipelineKind pipeline_kind_from_string(const std::string& name);

struct ExperimentConfig {
    DatasetSource dataset;
    PipelineKind pipeline = PipelineKind::SingleView;
    SolverSpec solver;
    MeraMvscOptions mera;
    int levels = 2;
    /// Basis dimension for out-of-sample assignment; 12 for IDX digit data,
    /// 9 otherwise, unless set.
    std::optional<int> d;
    bool ipd = false;
    std::optional<int> ipd_dim;  ///< defaults to d
    SplitSpec split;
    int val_per_cluster = 10;    ///< validation subset for subband selection
    bool exhaustive_scan = false;
    std::optional<Grid> grid;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output = "out";
    bool append = false;
    bool export_bundles = false;

    int basis_dim() const;
};

/// Parses and validates a JSON config; unknown keys are a config error.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& file);

/// Error raised by run_experiment; keeps the module's error kind and names
/// the stage that failed.
class StageError : public Error {
public:
    StageError(std::string stage, ErrorKind kind, const std::string& message)
        : Error(kind, "[" + stage + "] " + message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct ExperimentOutcome {
    std::filesystem::path report;
    std::filesystem::path metrics;
    std::filesystem::path trace;
    /// Per seed in-sample and out-of-sample ACC, in seed order.
    std::vector<double> in_acc, out_acc;
};

/// load -> normalize -> split -> validate -> grid -> pipeline -> metrics ->
/// bases -> out-of-sample -> diagnostics, writing report.json, metrics.csv
/// and trace.csv under cfg.output. On failure the partial report is written
/// before a StageError is thrown.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

/// 0 ok, 2 config/parameter, 3 data, 4 convergence.
int exit_code_for(ErrorKind kind);

}  // namespace wpsc
