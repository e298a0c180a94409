#include "wpsc/selection.hpp"

#include "wpsc/error.hpp"
#include "wpsc/metrics.hpp"
#include "wpsc/wavelet.hpp"

#include <iomanip>
#include <sstream>

namespace wpsc {

double clustering_error(const Matrix& x, const Labels& truth, const PipelineConfig& pipeline) {
    const PipelineResult res = run_single_view(x, pipeline);
    return 1.0 - clustering_accuracy(truth, res.labels);
}

const char* to_string(StopReason reason) {
    return reason == StopReason::ParentBetter ? "parent-better" : "max-depth";
}

namespace {

SubbandScorer pipeline_scorer(const Dataset& validation, const PipelineConfig& pipeline) {
    return [&validation, pipeline](const std::string& path, const Matrix& coefficients) {
        SubbandScore s;
        s.path = path;
        try {
            s.ce = clustering_error(coefficients, validation.labels(), pipeline);
        } catch (const Error& e) {
            // A subband that cannot be clustered (e.g. a zero column after
            // high-pass filtering) never wins.
            if (e.kind() != ErrorKind::DegenerateColumn && e.kind() != ErrorKind::DegenerateData) throw;
            s.ce = 1.0;
            s.note = e.what();
        }
        return s;
    };
}

}  // namespace

SelectionTrace select_subband(const Dataset& validation, int levels, const SubbandScorer& score) {
    if (levels < 1) fail(ErrorKind::Parameter, "select_subband: J must be >= 1");
    SelectionTrace trace;
    std::string parent;
    Matrix parent_coeffs = validation.data();
    SubbandScore parent_score = score(parent, parent_coeffs);
    trace.evaluated.push_back(parent_score);
    for (int level = 1; level <= levels; ++level) {
        auto children = wp_split(parent_coeffs, validation.img_h(), validation.img_w(), level);
        const auto names = wp_children(parent, levels);
        std::size_t best = 0;
        std::vector<SubbandScore> scores;
        for (std::size_t k = 0; k < 4; ++k) {
            scores.push_back(score(names[k], children[k]));
            trace.evaluated.push_back(scores.back());
            if (scores[k].ce < scores[best].ce) best = k;
        }
        if (parent_score.ce < scores[best].ce) {
            trace.chosen = parent;
            trace.stopped = StopReason::ParentBetter;
            return trace;
        }
        parent = names[best];
        parent_coeffs = std::move(children[best]);
        parent_score = scores[best];
    }
    trace.chosen = parent;
    trace.stopped = StopReason::MaxDepth;
    return trace;
}

SelectionTrace select_subband(const Dataset& validation, int levels, const PipelineConfig& pipeline) {
    validation.labels();
    return select_subband(validation, levels, pipeline_scorer(validation, pipeline));
}

SelectionTrace exhaustive_subband_scan(const Dataset& validation, int levels, const PipelineConfig& pipeline) {
    const auto scorer = pipeline_scorer(validation, pipeline);
    const auto set = wp_decompose(validation, levels);
    SelectionTrace trace;
    trace.evaluated.push_back(scorer("", set.original));
    for (const auto& [path, coeffs] : set.nodes) trace.evaluated.push_back(scorer(path, coeffs));
    std::size_t best = 0;
    for (std::size_t k = 1; k < trace.evaluated.size(); ++k)
        if (trace.evaluated[k].ce < trace.evaluated[best].ce) best = k;
    trace.chosen = trace.evaluated[best].path;
    trace.stopped = StopReason::MaxDepth;
    return trace;
}

std::string selection_trace_csv(const SelectionTrace& trace) {
    std::ostringstream out;
    out << "order,subband,level,ce,chosen,note\n" << std::setprecision(10);
    for (std::size_t k = 0; k < trace.evaluated.size(); ++k) {
        const auto& s = trace.evaluated[k];
        out << k << ',' << view_name(s.path) << ',' << s.path.size() << ',' << s.ce << ','
            << (s.path == trace.chosen ? 1 : 0) << ",\"" << s.note << "\"\n";
    }
    return out.str();
}

std::vector<ParamSet> Grid::points() const {
    std::vector<ParamSet> out{ParamSet{}};
    for (const auto& [key, values] : axes) {
        if (values.empty()) fail(ErrorKind::Config, "grid: axis '" + key + "' is empty");
        std::vector<ParamSet> next;
        for (const auto& partial : out)
            for (const auto& v : values) {
                ParamSet p = partial;
                p[key] = v;
                next.push_back(std::move(p));
            }
        out = std::move(next);
    }
    return out;
}

Grid default_mera_grid() {
    Grid g;
    std::vector<std::string> lambdas;
    for (int e = -10; e <= -1; ++e) lambdas.push_back("1e" + std::to_string(e));
    std::vector<std::string> ranks;
    for (int r = 2; r <= 20; ++r) ranks.push_back(std::to_string(r));
    g.axes = {{"lambda", lambdas}, {"R", ranks}};
    return g;
}

GridResult grid_search(const Dataset& ds, const Grid& grid, const GridEvaluator& evaluate) {
    if (grid.n_val_subsets < 1) fail(ErrorKind::Config, "grid: n_val_subsets must be >= 1");
    const auto points = grid.points();
    std::vector<Dataset> subsets;
    for (int s = 0; s < grid.n_val_subsets; ++s) {
        const auto idx = stratified_subset(ds.labels(), grid.val_size_per_cluster,
                                           grid.seed + static_cast<std::uint64_t>(s));
        subsets.push_back(ds.subset(idx));
    }
    GridResult result;
    for (const auto& p : points) {
        GridRow row;
        row.params = p;
        for (std::size_t s = 0; s < subsets.size(); ++s)
            row.accuracies.push_back(evaluate(subsets[s], p, grid.seed + s));
        double sum = 0.0;
        for (double a : row.accuracies) sum += a;
        row.mean_acc = sum / static_cast<double>(row.accuracies.size());
        result.table.push_back(std::move(row));
    }
    for (std::size_t k = 1; k < result.table.size(); ++k)
        if (result.table[k].mean_acc > result.table[result.best_index].mean_acc) result.best_index = k;
    result.best = result.table[result.best_index].params;
    return result;
}

GridEvaluator single_view_evaluator(const PipelineConfig& base) {
    return [base](const Dataset& subset, const ParamSet& params, std::uint64_t seed) {
        PipelineConfig cfg = base;
        cfg.seed = seed;
        cfg.clusters = subset.num_clusters();
        for (const auto& [k, v] : params) {
            if (k == "ipd_d" || k == "d") cfg.ipd_dim = std::stoi(v);
            else cfg.solver.params[k] = v;
        }
        const auto res = run_single_view(subset.data(), cfg);
        return clustering_accuracy(subset.labels(), res.labels);
    };
}

GridEvaluator mera_evaluator(const MeraPipelineConfig& base) {
    return [base](const Dataset& subset, const ParamSet& params, std::uint64_t seed) {
        MeraPipelineConfig cfg = base;
        cfg.seed = seed;
        cfg.clusters = subset.num_clusters();
        for (const auto& [k, v] : params) {
            if (k == "lambda") cfg.mera.lambda = std::stod(v);
            else if (k == "R" || k == "rank") cfg.mera.rank = std::stoi(v);
            else if (k == "ipd_d" || k == "d") cfg.ipd_dim = std::stoi(v);
            else fail(ErrorKind::Config, "mera grid: unknown parameter '" + k + "'");
        }
        const auto res = run_wp_mera(subset, cfg);
        return clustering_accuracy(subset.labels(), res.labels);
    };
}

std::string grid_table_csv(const GridResult& result) {
    std::ostringstream out;
    out << std::setprecision(10);
    if (result.table.empty()) return "";
    out << "index";
    for (const auto& [k, v] : result.table.front().params) out << ',' << k;
    out << ",mean_acc,best\n";
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        const auto& row = result.table[i];
        out << i;
        for (const auto& [k, v] : row.params) out << ',' << v;
        out << ',' << row.mean_acc << ',' << (i == result.best_index ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace wpsc
