#include "wpsc/experiment.hpp"

#include "wpsc/io.hpp"
#include "wpsc/metrics.hpp"
#include "wpsc/pipeline.hpp"
#include "wpsc/subspace.hpp"
#include "wpsc/wavelet.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace wpsc {

using json = nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(ErrorKind::Config, where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) fail(ErrorKind::Config, where + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::Config, std::string("config: key '") + key + "' has the wrong type");
    }
}

std::string scalar_to_string(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number()) return v.dump();
    fail(ErrorKind::Config, "config: value of '" + key + "' must be a scalar");
}

DatasetSource parse_source(const json& j) {
    check_keys(j, "dataset",
               {"source", "name", "clusters", "subspace_dim", "ambient_dim", "n_per_cluster", "noise_sigma",
                "seed", "img_h", "img_w", "smooth", "max_frequency", "images", "labels", "dir",
                "class_pattern", "path", "per_class", "subset_seed"});
    DatasetSource s;
    s.kind = get_or<std::string>(j, "source", "synthetic");
    s.name = get_or<std::string>(j, "name", "");
    s.uos.clusters = get_or(j, "clusters", s.uos.clusters);
    s.uos.subspace_dim = get_or(j, "subspace_dim", s.uos.subspace_dim);
    s.uos.ambient_dim = get_or(j, "ambient_dim", s.uos.ambient_dim);
    s.uos.n_per_cluster = get_or(j, "n_per_cluster", s.uos.n_per_cluster);
    s.uos.noise_sigma = get_or(j, "noise_sigma", s.uos.noise_sigma);
    s.uos.seed = get_or<std::uint64_t>(j, "seed", 0);
    s.uos.img_h = get_or(j, "img_h", 0);
    s.uos.img_w = get_or(j, "img_w", 0);
    s.smooth = get_or(j, "smooth", false);
    s.max_frequency = get_or(j, "max_frequency", 2);
    s.images = get_or<std::string>(j, "images", "");
    s.labels = get_or<std::string>(j, "labels", "");
    s.dir = get_or<std::string>(j, "dir", "");
    s.class_pattern = get_or<std::string>(j, "class_pattern", s.class_pattern);
    s.path = get_or<std::string>(j, "path", "");
    if (j.contains("per_class")) s.per_class = get_or(j, "per_class", 0);
    s.subset_seed = get_or<std::uint64_t>(j, "subset_seed", 0);
    if (s.kind != "synthetic" && s.kind != "idx" && s.kind != "pgm" && s.kind != "bundle")
        fail(ErrorKind::Config, "dataset: unknown source '" + s.kind + "'");
    if (s.kind == "idx" && s.images.empty()) fail(ErrorKind::Config, "dataset: idx source needs 'images'");
    if (s.kind == "pgm" && s.dir.empty()) fail(ErrorKind::Config, "dataset: pgm source needs 'dir'");
    if (s.kind == "bundle" && s.path.empty()) fail(ErrorKind::Config, "dataset: bundle source needs 'path'");
    return s;
}

json source_to_json(const DatasetSource& s) {
    json j;
    j["source"] = s.kind;
    j["name"] = s.name;
    if (s.kind == "synthetic") {
        j["clusters"] = s.uos.clusters;
        j["subspace_dim"] = s.uos.subspace_dim;
        j["ambient_dim"] = s.uos.ambient_dim;
        j["n_per_cluster"] = s.uos.n_per_cluster;
        j["noise_sigma"] = s.uos.noise_sigma;
        j["seed"] = s.uos.seed;
        j["img_h"] = s.uos.img_h;
        j["img_w"] = s.uos.img_w;
        j["smooth"] = s.smooth;
        if (s.smooth) j["max_frequency"] = s.max_frequency;
    } else if (s.kind == "idx") {
        j["images"] = s.images;
        j["labels"] = s.labels;
    } else if (s.kind == "pgm") {
        j["dir"] = s.dir;
        j["class_pattern"] = s.class_pattern;
    } else {
        j["path"] = s.path;
    }
    if (s.per_class) {
        j["per_class"] = *s.per_class;
        j["subset_seed"] = s.subset_seed;
    }
    return j;
}

json params_to_json(const std::map<std::string, std::string>& params) {
    json j = json::object();
    for (const auto& [k, v] : params) j[k] = v;
    return j;
}

json metrics_to_json(const MetricsReport& m) {
    return json{{"acc", m.acc}, {"nmi", m.nmi}, {"rand", m.rand}, {"f", m.f_score}, {"purity", m.purity}};
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["dataset"] = source_to_json(c.dataset);
    j["pipeline"] = to_string(c.pipeline);
    if (c.pipeline == PipelineKind::WpMera) {
        j["mera"] = json{{"lambda", c.mera.lambda}, {"R", c.mera.rank},       {"tol", c.mera.tol},
                         {"max_iter", c.mera.max_iter}, {"mu0", c.mera.mu0}, {"rho", c.mera.rho},
                         {"mu_max", c.mera.mu_max}, {"fit_sweeps", c.mera.fit_sweeps}};
    } else {
        j["solver"] = json{{"kind", to_string(c.solver.kind)},
                           {"params", params_to_json(c.solver.params)},
                           {"tol", c.solver.tol},
                           {"max_iter", c.solver.max_iter}};
    }
    if (c.pipeline == PipelineKind::WpSingleView) {
        j["levels"] = c.levels;
        j["validation"] = json{{"per_cluster", c.val_per_cluster}, {"exhaustive", c.exhaustive_scan}};
    }
    j["d"] = c.basis_dim();
    j["ipd"] = c.ipd;
    if (c.ipd) j["ipd_dim"] = c.ipd_dim.value_or(c.basis_dim());
    j["split"] = json{{"in_fraction", c.split.in_fraction}};
    if (c.grid) {
        json axes = json::object();
        for (const auto& [name, values] : c.grid->axes) axes[name] = values;
        j["grid"] = json{{"axes", axes},
                         {"n_val_subsets", c.grid->n_val_subsets},
                         {"val_size_per_cluster", c.grid->val_size_per_cluster}};
    }
    j["seeds"] = c.seeds;
    return j;
}

// Runs `body` and re-raises any library error tagged with the stage name.
template <class F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e.kind(), e.what());
    } catch (const std::invalid_argument& e) {
        throw StageError(name, ErrorKind::Parameter, e.what());
    } catch (const std::out_of_range& e) {
        throw StageError(name, ErrorKind::Parameter, e.what());
    }
}

std::string prefix_csv(const std::string& csv, const std::string& seed, bool keep_header) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            if (keep_header) out << "seed," << line << '\n';
            continue;
        }
        out << seed << ',' << line << '\n';
    }
    return out.str();
}

void write_text(const std::filesystem::path& file, const std::string& text, bool append = false) {
    std::ofstream out(file, append ? std::ios::app : std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + file.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for " + file.string());
}

std::string csv_number(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

std::string safe_name(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return s.empty() ? "dataset" : s;
}

struct ViewSet {
    std::vector<std::string> names;
    std::vector<Matrix> views;  ///< column-normalized
};

}  // namespace

Dataset load_source(const DatasetSource& s) {
    Dataset ds;
    if (s.kind == "synthetic") {
        ds = s.smooth ? generate_smooth_uos(s.uos, s.max_frequency) : generate_uos(s.uos);
    } else if (s.kind == "idx") {
        ds = load_idx(s.images, s.labels.empty() ? std::nullopt : std::optional<std::filesystem::path>(s.labels));
    } else if (s.kind == "pgm") {
        ds = load_pgm_dir(s.dir, s.class_pattern);
    } else if (s.kind == "bundle") {
        ds = load_bundle(s.path);
    } else {
        fail(ErrorKind::Config, "unknown dataset source '" + s.kind + "'");
    }
    if (s.per_class) {
        const auto idx = stratified_subset(ds.labels(), *s.per_class, s.subset_seed);
        ds = ds.subset(idx);
    }
    const std::string name = !s.name.empty() ? s.name : (s.kind == "synthetic" ? "synthetic" : ds.name());
    return ds.with_name(name.empty() ? s.kind : name);
}

const char* to_string(PipelineKind kind) {
    switch (kind) {
        case PipelineKind::SingleView: return "single-view";
        case PipelineKind::WpSingleView: return "wp-single-view";
        case PipelineKind::WpMera: return "wp-mera";
    }
    return "?";
}

PipelineKind pipeline_kind_from_string(const std::string& name) {
    if (name == "single-view") return PipelineKind::SingleView;
    if (name == "wp-single-view") return PipelineKind::WpSingleView;
    if (name == "wp-mera") return PipelineKind::WpMera;
    fail(ErrorKind::Config, "unknown pipeline '" + name + "'");
}

int ExperimentConfig::basis_dim() const {
    if (d) return *d;
    return dataset.kind == "idx" ? 12 : 9;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"dataset", "pipeline", "solver", "mera", "levels", "d", "ipd", "ipd_dim", "split", "validation",
                "grid", "seeds", "seed", "output", "append", "export_bundles"});
    ExperimentConfig c;
    if (j.contains("dataset")) c.dataset = parse_source(j["dataset"]);
    c.pipeline = pipeline_kind_from_string(get_or<std::string>(j, "pipeline", "single-view"));
    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s, "solver", {"kind", "params", "tol", "max_iter"});
        c.solver.kind = solver_kind_from_string(get_or<std::string>(s, "kind", "SSC"));
        if (s.contains("params")) {
            check_keys(s["params"], "solver.params", {"alpha", "mode", "affine", "outlier_weight", "lambda", "k",
                                                      "d_max", "q"});
            for (const auto& [k, v] : s["params"].items()) c.solver.params[k] = scalar_to_string(v, k);
        }
        c.solver.tol = get_or(s, "tol", c.solver.tol);
        c.solver.max_iter = get_or(s, "max_iter", c.solver.max_iter);
    }
    if (j.contains("mera")) {
        const json& m = j["mera"];
        check_keys(m, "mera", {"lambda", "R", "tol", "max_iter", "mu0", "rho", "mu_max", "fit_sweeps"});
        c.mera.lambda = get_or(m, "lambda", c.mera.lambda);
        c.mera.rank = get_or(m, "R", c.mera.rank);
        c.mera.tol = get_or(m, "tol", c.mera.tol);
        c.mera.max_iter = get_or(m, "max_iter", c.mera.max_iter);
        c.mera.mu0 = get_or(m, "mu0", c.mera.mu0);
        c.mera.rho = get_or(m, "rho", c.mera.rho);
        c.mera.mu_max = get_or(m, "mu_max", c.mera.mu_max);
        c.mera.fit_sweeps = get_or(m, "fit_sweeps", c.mera.fit_sweeps);
    }
    c.levels = get_or(j, "levels", c.levels);
    if (j.contains("d")) c.d = get_or(j, "d", 0);
    c.ipd = get_or(j, "ipd", false);
    if (j.contains("ipd_dim")) c.ipd_dim = get_or(j, "ipd_dim", 0);
    if (j.contains("split")) {
        check_keys(j["split"], "split", {"in_fraction"});
        c.split.in_fraction = get_or(j["split"], "in_fraction", c.split.in_fraction);
    }
    if (j.contains("validation")) {
        check_keys(j["validation"], "validation", {"per_cluster", "exhaustive"});
        c.val_per_cluster = get_or(j["validation"], "per_cluster", c.val_per_cluster);
        c.exhaustive_scan = get_or(j["validation"], "exhaustive", false);
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        Grid grid;
        if (g.is_string()) {
            if (g.get<std::string>() != "default-mera") fail(ErrorKind::Config, "grid: unknown preset");
            grid = default_mera_grid();
        } else {
            check_keys(g, "grid", {"axes", "n_val_subsets", "val_size_per_cluster"});
            if (g.contains("axes")) {
                if (g["axes"].is_string()) {
                    if (g["axes"].get<std::string>() != "default-mera") fail(ErrorKind::Config, "grid: unknown preset");
                    grid.axes = default_mera_grid().axes;
                } else {
                    if (!g["axes"].is_object()) fail(ErrorKind::Config, "grid.axes must be an object");
                    for (const auto& [name, values] : g["axes"].items()) {
                        if (!values.is_array()) fail(ErrorKind::Config, "grid axis '" + name + "' must be a list");
                        std::vector<std::string> vs;
                        for (const auto& v : values) vs.push_back(scalar_to_string(v, name));
                        grid.axes.emplace_back(name, vs);
                    }
                }
            }
            grid.n_val_subsets = get_or(g, "n_val_subsets", grid.n_val_subsets);
            grid.val_size_per_cluster = get_or(g, "val_size_per_cluster", grid.val_size_per_cluster);
        }
        c.grid = grid;
    }
    if (j.contains("seeds")) {
        c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
    } else if (j.contains("seed")) {
        c.seeds = {get_or<std::uint64_t>(j, "seed", 0)};
    }
    c.output = get_or<std::string>(j, "output", c.output.string());
    c.append = get_or(j, "append", false);
    c.export_bundles = get_or(j, "export_bundles", false);

    if (c.seeds.empty()) fail(ErrorKind::Config, "seeds must not be empty");
    if (c.basis_dim() < 1) fail(ErrorKind::Config, "d must be >= 1");
    if (c.ipd_dim && *c.ipd_dim < 1) fail(ErrorKind::Config, "ipd_dim must be >= 1");
    if (c.pipeline == PipelineKind::WpSingleView && c.levels < 1) fail(ErrorKind::Config, "levels must be >= 1");
    if (!(c.split.in_fraction > 0.0 && c.split.in_fraction <= 1.0))
        fail(ErrorKind::Config, "split.in_fraction must be in (0, 1]");
    if (c.pipeline != PipelineKind::WpMera) c.solver.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Io, "cannot read config " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Convergence: return 4;
        case ErrorKind::InfeasibleSpec:
        case ErrorKind::Parameter:
        case ErrorKind::NoGrid:
        case ErrorKind::Depth:
        case ErrorKind::Size:
        case ErrorKind::Config: return 2;
        default: return 3;
    }
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output, ec);
    if (ec) throw StageError("output", ErrorKind::Io, "cannot create " + cfg.output.string() + ": " + ec.message());

    ExperimentOutcome outcome;
    outcome.report = cfg.output / "report.json";
    outcome.metrics = cfg.output / "metrics.csv";
    outcome.trace = cfg.output / "trace.csv";

    json report;
    report["config"] = config_to_json(cfg);
    json runs = json::array();
    std::string metrics_rows, trace_rows, grid_rows;
    const bool metrics_exists = fs::exists(outcome.metrics);

    auto flush = [&](const json* error) {
        json r = report;
        r["runs"] = runs;
        if (!outcome.in_acc.empty()) {
            double si = 0.0, so = 0.0;
            for (double a : outcome.in_acc) si += a;
            for (double a : outcome.out_acc) so += a;
            json summary;
            summary["in_acc_mean"] = si / static_cast<double>(outcome.in_acc.size());
            if (!outcome.out_acc.empty()) summary["out_acc_mean"] = so / static_cast<double>(outcome.out_acc.size());
            r["summary"] = summary;
        }
        if (error) r["error"] = *error;
        write_text(outcome.report, r.dump(2) + "\n");
        const bool header = !(cfg.append && metrics_exists);
        write_text(outcome.metrics,
                   (header ? "dataset,pipeline,subband,seed,phase,acc,nmi,rand,f,purity,ce,seconds\n" : "") +
                       metrics_rows,
                   !header);
        write_text(outcome.trace, trace_rows);
        if (!grid_rows.empty()) write_text(cfg.output / "grid.csv", grid_rows);
    };

    try {
        const Dataset raw = stage("load", [&] { return load_source(cfg.dataset); });
        const Dataset ds = stage("normalize", [&] {
            raw.labels();
            return column_normalize(raw);
        });
        report["dataset"] = json{{"name", ds.name()},   {"dim", ds.dim()},         {"size", ds.size()},
                                 {"img_h", ds.img_h()}, {"img_w", ds.img_w()},     {"clusters", ds.num_clusters()}};
        const int d = cfg.basis_dim();
        const std::optional<int> ipd =
            cfg.ipd ? std::optional<int>(cfg.ipd_dim.value_or(d)) : std::nullopt;
        const int clusters = ds.num_clusters();

        for (std::size_t run_index = 0; run_index < cfg.seeds.size(); ++run_index) {
            const std::uint64_t seed = cfg.seeds[run_index];
            const std::string seed_str = std::to_string(seed);
            json run;
            run["seed"] = seed;
            const auto t0 = std::chrono::steady_clock::now();

            const SplitResult parts = stage("split", [&] { return split(ds, SplitSpec{cfg.split.in_fraction, seed}); });
            const Dataset& in = parts.in_sample;
            const Dataset& out = parts.out_sample;
            run["in_size"] = in.size();
            run["out_size"] = out.size();

            stage("validate", [&] {
                if (clusters < 2) fail(ErrorKind::Labeling, "need at least two classes");
                if (cfg.pipeline != PipelineKind::SingleView) {
                    const int levels = cfg.pipeline == PipelineKind::WpMera ? 1 : cfg.levels;
                    if (in.img_h() < (1 << levels) || in.img_w() < (1 << levels))
                        fail(ErrorKind::Size, "images are smaller than 2^J in some direction");
                }
                if (cfg.pipeline == PipelineKind::WpMera) {
                    choose_grid(in.size());
                    MeraShape{1, 1, 5, cfg.mera.rank}.validate();
                    if (cfg.mera.rank > in.size()) fail(ErrorKind::Parameter, "R exceeds the in-sample size");
                }
                if (cfg.grid && cfg.grid->axes.empty()) fail(ErrorKind::Config, "grid has no axes");
                return 0;
            });

            PipelineConfig single{cfg.solver, clusters, ipd, seed};
            MeraPipelineConfig multi{cfg.mera, clusters, ipd, seed};
            multi.mera.seed = seed;
            std::string chosen;  // subband path for wp-single-view
            std::string subband_label = "O";
            json hyper;

            if (cfg.pipeline == PipelineKind::WpSingleView) {
                const SelectionTrace trace = stage("select", [&] {
                    const auto idx = stratified_subset(in.labels(), cfg.val_per_cluster, seed);
                    const Dataset validation = in.subset(idx);
                    return cfg.exhaustive_scan ? exhaustive_subband_scan(validation, cfg.levels, single)
                                               : select_subband(validation, cfg.levels, single);
                });
                chosen = trace.chosen;
                subband_label = view_name(chosen);
                json evaluated = json::array();
                for (const auto& s : trace.evaluated) {
                    json e{{"subband", view_name(s.path)}, {"ce", s.ce}};
                    if (!s.note.empty()) e["note"] = s.note;
                    evaluated.push_back(e);
                }
                run["selection"] = json{{"evaluations", trace.evaluated.size()},
                                        {"stopped", to_string(trace.stopped)},
                                        {"evaluated", evaluated}};
                trace_rows += prefix_csv(selection_trace_csv(trace), seed_str, run_index == 0);
            } else if (cfg.pipeline == PipelineKind::WpMera) {
                subband_label = "O+A+H+V+D";
            }
            run["chosen_subband"] = cfg.pipeline == PipelineKind::WpSingleView ? json(subband_label) : json(nullptr);

            // In-sample data in the clustering domain.
            const Dataset in_domain =
                cfg.pipeline == PipelineKind::WpSingleView ? in.with_data(wp_node(in, chosen)) : in;

            if (cfg.grid) {
                const GridResult g = stage("grid", [&] {
                    Grid grid = *cfg.grid;
                    grid.seed = seed;
                    return cfg.pipeline == PipelineKind::WpMera ? grid_search(in, grid, mera_evaluator(multi))
                                                                : grid_search(in_domain, grid, single_view_evaluator(single));
                });
                stage("grid", [&] {
                    for (const auto& [k, v] : g.best) {
                        if (cfg.pipeline == PipelineKind::WpMera) {
                            if (k == "lambda") multi.mera.lambda = std::stod(v);
                            else if (k == "R" || k == "rank") multi.mera.rank = std::stoi(v);
                            else if (k == "ipd_d" || k == "d") multi.ipd_dim = std::stoi(v);
                        } else if (k == "ipd_d" || k == "d") {
                            single.ipd_dim = std::stoi(v);
                        } else {
                            single.solver.params[k] = v;
                        }
                    }
                    return 0;
                });
                run["grid"] = json{{"best", params_to_json(g.best)},
                                   {"best_mean_acc", g.table[g.best_index].mean_acc},
                                   {"points", g.table.size()}};
                grid_rows += prefix_csv(grid_table_csv(g), seed_str, grid_rows.empty());
            }

            if (cfg.pipeline == PipelineKind::WpMera) {
                hyper = json{{"lambda", multi.mera.lambda}, {"R", multi.mera.rank}};
            } else {
                hyper = json{{"solver", to_string(single.solver.kind)}, {"params", params_to_json(single.solver.params)}};
            }
            hyper["ipd_dim"] = (cfg.pipeline == PipelineKind::WpMera ? multi.ipd_dim : single.ipd_dim)
                                   ? json(*(cfg.pipeline == PipelineKind::WpMera ? multi.ipd_dim : single.ipd_dim))
                                   : json(nullptr);
            run["hyperparameters"] = hyper;

            Labels pred;
            if (cfg.pipeline == PipelineKind::WpMera) {
                const MeraPipelineResult r = stage("cluster", [&] { return run_wp_mera(in, multi); });
                pred = r.labels;
                const auto& last = r.solver.trace.back();
                double worst = 0.0;
                for (double v : last.view_residuals) worst = std::max(worst, v);
                run["convergence"] = json{{"iterations", r.solver.iterations},
                                          {"converged", r.solver.converged},
                                          {"view_residual", worst},
                                          {"consensus_residual", last.consensus_residual},
                                          {"fit_error", last.fit_error}};
                trace_rows += prefix_csv(mera_trace_csv(r.solver.trace), seed_str, run_index == 0);
            } else {
                const PipelineResult r = stage("cluster", [&] { return run_single_view(in_domain.data(), single); });
                pred = r.labels;
                run["convergence"] = json{{"iterations", r.iterations}, {"residual", r.residual}};
                if (cfg.pipeline == PipelineKind::SingleView) {
                    std::ostringstream t;
                    t << "solver,iterations,residual\n"
                      << to_string(single.solver.kind) << ',' << r.iterations << ',' << csv_number(r.residual) << '\n';
                    trace_rows += prefix_csv(t.str(), seed_str, run_index == 0);
                }
            }

            const MetricsReport in_metrics = stage("metrics", [&] { return evaluate(in.labels(), pred); });
            const double in_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            json metrics;
            metrics["in"] = metrics_to_json(in_metrics);
            outcome.in_acc.push_back(in_metrics.acc);
            auto csv_row = [&](const char* phase, const MetricsReport& m, double seconds) {
                std::ostringstream row;
                row << ds.name() << ',' << to_string(cfg.pipeline) << ',' << subband_label << ',' << seed << ','
                    << phase << ',' << csv_number(m.acc) << ',' << csv_number(m.nmi) << ',' << csv_number(m.rand)
                    << ',' << csv_number(m.f_score) << ',' << csv_number(m.purity) << ','
                    << csv_number(1.0 - m.acc) << ',' << csv_number(seconds) << '\n';
                metrics_rows += row.str();
            };
            csv_row("in", in_metrics, in_seconds);

            // Views used for the subspace models.
            auto views_of = [&](const Dataset& part) {
                ViewSet vs;
                if (cfg.pipeline == PipelineKind::WpMera) {
                    vs.views = five_views(part);
                    for (const auto& p : five_view_paths()) vs.names.push_back(view_name(p));
                } else {
                    vs.views.push_back(column_normalize(cfg.pipeline == PipelineKind::WpSingleView
                                                            ? wp_node(part, chosen)
                                                            : part.data()));
                    vs.names.push_back(subband_label);
                }
                return vs;
            };
            const ViewSet in_views = stage("bases", [&] { return views_of(in); });
            std::vector<ClusterModel> models = stage("bases", [&] {
                std::vector<ClusterModel> ms;
                for (const auto& v : in_views.views) ms.push_back(estimate_bases(v, pred, d));
                return ms;
            });
            json warnings = json::array();
            for (std::size_t v = 0; v < models.size(); ++v)
                for (const auto& w : models[v].warnings) warnings.push_back(in_views.names[v] + ": " + w);
            run["basis_warnings"] = warnings;

            if (out.size() > 0) {
                const auto t1 = std::chrono::steady_clock::now();
                const Labels oos = stage("oos", [&] {
                    const ViewSet out_views = views_of(out);
                    return models.size() == 1 ? assign_oos(out_views.views.front(), models.front())
                                              : assign_oos_multiview(out_views.views, models);
                });
                const MetricsReport out_metrics = stage("metrics", [&] { return evaluate(out.labels(), oos); });
                metrics["out"] = metrics_to_json(out_metrics);
                outcome.out_acc.push_back(out_metrics.acc);
                csv_row("out", out_metrics,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count());
            } else {
                metrics["out"] = nullptr;
            }
            run["metrics"] = metrics;

            // Geometry of the ground-truth subspaces in each domain.
            run["diagnostics"] = stage("diagnostics", [&] {
                json diag = json::array();
                std::vector<std::pair<std::string, Matrix>> domains;
                domains.emplace_back("O", column_normalize(in.data()));
                if (cfg.pipeline == PipelineKind::WpSingleView && !chosen.empty())
                    domains.emplace_back(subband_label, in_views.views.front());
                if (cfg.pipeline == PipelineKind::WpMera)
                    for (std::size_t v = 1; v < in_views.views.size(); ++v)
                        domains.emplace_back(in_views.names[v], in_views.views[v]);
                for (const auto& [name, x] : domains) {
                    const ClusterModel truth_model = estimate_bases(x, in.labels(), d);
                    const double aff = average_affinity(truth_model);
                    const AngleResult angle = mean_principal_angle(aff);
                    diag.push_back(json{{"view", name}, {"affinity", aff}, {"angle_deg", angle.degrees},
                                        {"clamped", angle.clamped}});
                }
                return diag;
            });

            if (cfg.export_bundles) {
                stage("export", [&] {
                    const std::string base = safe_name(ds.name());
                    const fs::path dir = cfg.output / "bundles";
                    fs::create_directories(dir);
                    const std::string tag = "seed" + seed_str;
                    save_bundle(dir / (base + "__O__" + tag + ".wpsc"), in);
                    if (cfg.pipeline != PipelineKind::SingleView) {
                        const auto set = wp_decompose(in, cfg.pipeline == PipelineKind::WpMera ? 1 : cfg.levels);
                        for (const auto& [path, coeffs] : set.nodes)
                            save_bundle(dir / (base + "__" + path + "__" + tag + ".wpsc"), in.with_data(coeffs));
                    }
                    for (std::size_t v = 0; v < models.size(); ++v) {
                        const std::string stem = base + "__model_" + in_views.names[v] + "__" + tag;
                        save_matrix(dir / (stem + "_means.wpsc"), models[v].means);
                        for (int c = 0; c < models[v].clusters(); ++c)
                            save_matrix(dir / (stem + "_basis" + std::to_string(c) + ".wpsc"),
                                        models[v].bases[static_cast<std::size_t>(c)]);
                    }
                    return 0;
                });
            }
            runs.push_back(run);
        }
    } catch (const StageError& e) {
        json err{{"stage", e.stage()}, {"kind", to_string(e.kind())}, {"message", e.what()}};
        try {
            flush(&err);
        } catch (const Error&) {
        }
        throw;
    }
    stage("output", [&] {
        flush(nullptr);
        return 0;
    });
    return outcome;
}

}  // namespace wpsc
