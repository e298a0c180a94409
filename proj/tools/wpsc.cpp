// Command-line driver: data generation, transforms, clustering stages and the
// full experiment runner.

#include "wpsc/experiment.hpp"
#include "wpsc/io.hpp"
#include "wpsc/metrics.hpp"
#include "wpsc/pipeline.hpp"
#include "wpsc/selection.hpp"
#include "wpsc/subspace.hpp"
#include "wpsc/wavelet.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace wpsc;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct InputArgs {
    std::string bundle, pgm_dir, pattern = "obj(\\d+)__", idx_images, idx_labels;
};

void add_input(CLI::App* cmd, InputArgs& in) {
    cmd->add_option("-i,--input", in.bundle, "Dataset bundle (.wpsc)");
    cmd->add_option("--pgm-dir", in.pgm_dir, "Directory of PGM images");
    cmd->add_option("--pattern", in.pattern, "Class-id regex for PGM filenames");
    cmd->add_option("--idx-images", in.idx_images, "IDX image file");
    cmd->add_option("--idx-labels", in.idx_labels, "IDX label file");
}

Dataset load_input(const InputArgs& in) {
    DatasetSource s;
    if (!in.bundle.empty()) {
        s.kind = "bundle";
        s.path = in.bundle;
    } else if (!in.pgm_dir.empty()) {
        s.kind = "pgm";
        s.dir = in.pgm_dir;
        s.class_pattern = in.pattern;
    } else if (!in.idx_images.empty()) {
        s.kind = "idx";
        s.images = in.idx_images;
        s.labels = in.idx_labels;
    } else {
        fail(ErrorKind::Config, "no input given (use --input, --pgm-dir or --idx-images)");
    }
    return load_source(s);
}

Labels read_labels(const std::string& file) {
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Io, "cannot read " + file);
    Labels out;
    long long v;
    while (in >> v) {
        if (v < 0) fail(ErrorKind::Labeling, file + ": negative label");
        out.push_back(static_cast<int>(v));
    }
    if (!in.eof()) fail(ErrorKind::Format, file + ": labels must be integers, one per line");
    return out;
}

std::vector<double> read_numbers(const std::string& file) {
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Io, "cannot read " + file);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) fail(ErrorKind::Format, file + ": expected numbers");
    return out;
}

void write_labels(const std::string& file, const Labels& labels) {
    std::ofstream out(file);
    if (!out) fail(ErrorKind::Io, "cannot write " + file);
    for (int l : labels) out << l << '\n';
}

void write_file(const std::string& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) fail(ErrorKind::Io, "cannot write " + file);
    out << text;
}

json metrics_json(const MetricsReport& m) {
    return json{{"acc", m.acc}, {"nmi", m.nmi}, {"rand", m.rand}, {"f", m.f_score}, {"purity", m.purity}};
}

struct SolverArgs {
    std::string kind = "SSC";
    std::vector<std::string> params;
    int max_iter = 0;
};

void add_solver(CLI::App* cmd, SolverArgs& s) {
    cmd->add_option("--solver", s.kind, "SSC, LRR, NSN or RTSC");
    cmd->add_option("-p,--param", s.params, "Solver parameter key=value (repeatable)");
    cmd->add_option("--max-iter", s.max_iter, "Iteration cap (0 = solver default)");
}

SolverSpec make_solver(const SolverArgs& s) {
    SolverSpec spec;
    spec.kind = solver_kind_from_string(s.kind);
    spec.max_iter = s.max_iter;
    for (const auto& p : s.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos || eq == 0) fail(ErrorKind::Config, "solver parameter '" + p + "' is not key=value");
        spec.params[p.substr(0, eq)] = p.substr(eq + 1);
    }
    spec.validate();
    return spec;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Wavelet-packet subspace clustering"};
    app.require_subcommand(1);

    // synth
    UosSpec uos;
    bool smooth = false;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a union-of-subspaces dataset bundle");
    synth->add_option("--clusters", uos.clusters)->default_val(5);
    synth->add_option("--subspace-dim", uos.subspace_dim)->default_val(5);
    synth->add_option("--ambient-dim", uos.ambient_dim)->default_val(100);
    synth->add_option("--per-cluster", uos.n_per_cluster)->default_val(50);
    synth->add_option("--sigma", uos.noise_sigma)->default_val(0.0);
    synth->add_option("--seed", uos.seed)->default_val(0);
    synth->add_option("--img-h", uos.img_h);
    synth->add_option("--img-w", uos.img_w);
    synth->add_flag("--smooth", smooth, "Smooth image bases with alternating-sign noise");
    synth->add_option("-o,--output", synth_out, "Output bundle")->required();

    // wpt
    InputArgs wpt_in;
    int wpt_levels = 2;
    std::string wpt_dir;
    auto* wpt = app.add_subcommand("wpt", "Wavelet-packet decomposition into per-node bundles");
    add_input(wpt, wpt_in);
    wpt->add_option("-J,--levels", wpt_levels);
    wpt->add_option("-o,--out-dir", wpt_dir)->required();

    // cluster
    InputArgs cl_in;
    SolverArgs cl_solver;
    int cl_clusters = 0, cl_ipd = 0;
    std::uint64_t cl_seed = 0;
    std::string cl_subband, cl_labels_out;
    auto* cluster = app.add_subcommand("cluster", "Single-view subspace clustering");
    add_input(cluster, cl_in);
    add_solver(cluster, cl_solver);
    cluster->add_option("-C,--clusters", cl_clusters, "Number of clusters (default: from labels)");
    cluster->add_option("--ipd", cl_ipd, "Keep the d largest coefficients per column");
    cluster->add_option("--subband", cl_subband, "Cluster this wavelet-packet node instead of the data");
    cluster->add_option("--seed", cl_seed);
    cluster->add_option("--labels-out", cl_labels_out);

    // select-subband
    InputArgs sel_in;
    SolverArgs sel_solver;
    int sel_levels = 2, sel_val = 10, sel_ipd = 0;
    std::uint64_t sel_seed = 0;
    bool sel_exhaustive = false;
    std::string sel_trace;
    auto* select = app.add_subcommand("select-subband", "Greedy best-subband search on a validation subset");
    add_input(select, sel_in);
    add_solver(select, sel_solver);
    select->add_option("-J,--levels", sel_levels);
    select->add_option("--val-per-cluster", sel_val, "Validation points per class");
    select->add_option("--ipd", sel_ipd);
    select->add_option("--seed", sel_seed);
    select->add_flag("--exhaustive", sel_exhaustive, "Score every node (diagnostic)");
    select->add_option("--trace-out", sel_trace, "CSV trace file");

    // mera
    InputArgs me_in;
    MeraMvscOptions me_opt;
    int me_clusters = 0, me_ipd = 0;
    std::uint64_t me_seed = 0;
    std::string me_labels_out, me_trace;
    auto* mera = app.add_subcommand("mera", "Five-view MERA multi-view clustering");
    add_input(mera, me_in);
    mera->add_option("--lambda", me_opt.lambda)->default_val(1e-4);
    mera->add_option("-R,--rank", me_opt.rank)->default_val(3);
    mera->add_option("--max-iter", me_opt.max_iter)->default_val(200);
    mera->add_option("--tol", me_opt.tol)->default_val(1e-6);
    mera->add_option("-C,--clusters", me_clusters);
    mera->add_option("--ipd", me_ipd);
    mera->add_option("--seed", me_seed);
    mera->add_option("--labels-out", me_labels_out);
    mera->add_option("--trace-out", me_trace);

    // oos
    std::string oos_train, oos_train_labels, oos_test, oos_labels_out, oos_subband;
    int oos_d = 9;
    auto* oos = app.add_subcommand("oos", "Assign out-of-sample points to the nearest cluster subspace");
    oos->add_option("--train", oos_train, "In-sample bundle")->required();
    oos->add_option("--train-labels", oos_train_labels, "Cluster labels of the in-sample points (default: bundle labels)");
    oos->add_option("--test", oos_test, "Out-of-sample bundle")->required();
    oos->add_option("-d,--dim", oos_d, "Subspace dimension");
    oos->add_option("--subband", oos_subband, "Work in this wavelet-packet node");
    oos->add_option("--labels-out", oos_labels_out);

    // eval
    std::string ev_truth, ev_pred, ev_a, ev_b;
    auto* eval = app.add_subcommand("eval", "Clustering metrics or a Wilcoxon signed-rank test");
    eval->add_option("--truth", ev_truth, "Ground-truth labels, one per line");
    eval->add_option("--pred", ev_pred, "Predicted labels, one per line");
    eval->add_option("--wilcoxon-a", ev_a, "First paired sample");
    eval->add_option("--wilcoxon-b", ev_b, "Second paired sample");

    // run
    std::string run_config, run_output;
    bool run_append = false, run_export = false;
    std::vector<std::uint64_t> run_seeds;
    auto* run = app.add_subcommand("run", "Full experiment from a JSON config");
    run->add_option("-c,--config", run_config)->required();
    run->add_option("-o,--output", run_output, "Output directory (overrides config)");
    run->add_option("--seed", run_seeds, "Seeds (override config)");
    run->add_flag("--append", run_append, "Append rows to an existing metrics.csv");
    run->add_flag("--export-bundles", run_export, "Write per-node and model bundles");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (synth->parsed()) {
        const Dataset ds = smooth ? generate_smooth_uos(uos) : generate_uos(uos);
        save_bundle(synth_out, ds);
        std::cout << "wrote " << synth_out << ": D=" << ds.dim() << " N=" << ds.size() << " C=" << ds.num_clusters()
                  << '\n';
    } else if (wpt->parsed()) {
        const Dataset ds = load_input(wpt_in);
        const auto set = wp_decompose(ds, wpt_levels);
        fs::create_directories(wpt_dir);
        const std::string base = ds.name().empty() ? "data" : ds.name();
        save_bundle(fs::path(wpt_dir) / (base + "__O.wpsc"), ds);
        for (const auto& [path, coeffs] : set.nodes)
            save_bundle(fs::path(wpt_dir) / (base + "__" + path + ".wpsc"), ds.with_data(coeffs));
        std::cout << set.size() << " nodes written to " << wpt_dir << '\n';
    } else if (cluster->parsed()) {
        const Dataset ds = load_input(cl_in);
        PipelineConfig cfg;
        cfg.solver = make_solver(cl_solver);
        cfg.clusters = cl_clusters > 0 ? cl_clusters : ds.num_clusters();
        if (cl_ipd > 0) cfg.ipd_dim = cl_ipd;
        cfg.seed = cl_seed;
        const Matrix x = cl_subband.empty() ? ds.data() : wp_node(ds, cl_subband);
        const auto res = run_single_view(x, cfg);
        if (!cl_labels_out.empty()) write_labels(cl_labels_out, res.labels);
        json out{{"iterations", res.iterations}, {"residual", res.residual}};
        if (ds.has_labels()) out["metrics"] = metrics_json(evaluate(ds.labels(), res.labels));
        std::cout << out.dump(2) << '\n';
    } else if (select->parsed()) {
        const Dataset ds = load_input(sel_in);
        PipelineConfig cfg;
        cfg.solver = make_solver(sel_solver);
        cfg.clusters = ds.num_clusters();
        if (sel_ipd > 0) cfg.ipd_dim = sel_ipd;
        cfg.seed = sel_seed;
        const Dataset validation = ds.subset(stratified_subset(ds.labels(), sel_val, sel_seed));
        const auto trace = sel_exhaustive ? exhaustive_subband_scan(validation, sel_levels, cfg)
                                          : select_subband(validation, sel_levels, cfg);
        const std::string csv = selection_trace_csv(trace);
        if (!sel_trace.empty()) write_file(sel_trace, csv);
        std::cout << csv << "chosen: " << view_name(trace.chosen) << " (" << to_string(trace.stopped) << ")\n";
    } else if (mera->parsed()) {
        const Dataset ds = load_input(me_in);
        MeraPipelineConfig cfg;
        cfg.mera = me_opt;
        cfg.mera.seed = me_seed;
        cfg.clusters = me_clusters > 0 ? me_clusters : ds.num_clusters();
        if (me_ipd > 0) cfg.ipd_dim = me_ipd;
        cfg.seed = me_seed;
        const auto res = run_wp_mera(ds, cfg);
        if (!me_labels_out.empty()) write_labels(me_labels_out, res.labels);
        if (!me_trace.empty()) write_file(me_trace, mera_trace_csv(res.solver.trace));
        json out{{"iterations", res.solver.iterations},
                 {"converged", res.solver.converged},
                 {"lambda", me_opt.lambda},
                 {"R", me_opt.rank}};
        if (ds.has_labels()) out["metrics"] = metrics_json(evaluate(ds.labels(), res.labels));
        std::cout << out.dump(2) << '\n';
    } else if (oos->parsed()) {
        const Dataset train = load_bundle(oos_train);
        const Dataset test = load_bundle(oos_test);
        const Labels labels = oos_train_labels.empty() ? train.labels() : read_labels(oos_train_labels);
        auto domain = [&](const Dataset& ds) {
            return column_normalize(oos_subband.empty() ? ds.data() : wp_node(ds, oos_subband));
        };
        const ClusterModel model = estimate_bases(domain(train), labels, oos_d);
        for (const auto& w : model.warnings) std::cerr << "warning: " << w << '\n';
        const Labels assigned = assign_oos(domain(test), model);
        if (!oos_labels_out.empty()) write_labels(oos_labels_out, assigned);
        json out{{"assigned", assigned.size()}};
        if (test.has_labels()) out["metrics"] = metrics_json(evaluate(test.labels(), assigned));
        std::cout << out.dump(2) << '\n';
    } else if (eval->parsed()) {
        json out;
        if (!ev_truth.empty() || !ev_pred.empty()) {
            if (ev_truth.empty() || ev_pred.empty()) fail(ErrorKind::Config, "eval needs both --truth and --pred");
            out["metrics"] = metrics_json(evaluate(read_labels(ev_truth), read_labels(ev_pred)));
        }
        if (!ev_a.empty() || !ev_b.empty()) {
            if (ev_a.empty() || ev_b.empty()) fail(ErrorKind::Config, "Wilcoxon test needs both samples");
            out["wilcoxon_p"] = wilcoxon_signed_rank(read_numbers(ev_a), read_numbers(ev_b));
        }
        if (out.is_null()) fail(ErrorKind::Config, "eval: nothing to do");
        std::cout << out.dump(2) << '\n';
    } else if (run->parsed()) {
        ExperimentConfig cfg = load_experiment_config(run_config);
        if (!run_output.empty()) cfg.output = run_output;
        if (!run_seeds.empty()) cfg.seeds = run_seeds;
        if (run_append) cfg.append = true;
        if (run_export) cfg.export_bundles = true;
        const auto outcome = run_experiment(cfg);
        double mean_in = 0.0;
        for (double a : outcome.in_acc) mean_in += a / static_cast<double>(outcome.in_acc.size());
        std::cout << "report: " << outcome.report.string() << "\nmean in-sample ACC: " << mean_in << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const StageError& e) {
        std::cerr << "error (" << to_string(e.kind()) << ") in stage " << e.stage() << ": " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
