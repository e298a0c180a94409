#include "support.hpp"

#include "wpsc/dataset.hpp"
#include "wpsc/error.hpp"
#include "wpsc/experiment.hpp"
#include "wpsc/io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace wpsc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

json synthetic_mera(const fs::path& out) {
    return json{{"dataset",
                 {{"source", "synthetic"}, {"name", "uos"}, {"clusters", 3}, {"subspace_dim", 2},
                  {"ambient_dim", 64}, {"n_per_cluster", 15}, {"noise_sigma", 0.0}, {"seed", 4},
                  {"img_h", 8}, {"img_w", 8}}},
                {"pipeline", "wp-mera"},
                {"d", 2},
                {"split", {{"in_fraction", 0.8}}},
                {"seeds", {0}},
                {"output", out.string()}};
}

// Five classes of smooth 16x16 images written as PGM files.
fs::path pgm_fixture() {
    const fs::path dir = testsupport::scratch_dir("pgm_fixture");
    UosSpec spec{5, 2, 256, 12, 0.02, 9, 16, 16};
    const Dataset ds = generate_smooth_uos(spec);
    const double lo = ds.data().minCoeff(), hi = ds.data().maxCoeff();
    std::vector<int> count(5, 0);
    for (int j = 0; j < ds.size(); ++j) {
        Matrix img(16, 16);
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c) img(r, c) = (ds.data()(r * 16 + c, j) - lo) / (hi - lo);
        const int label = ds.labels()[static_cast<std::size_t>(j)];
        write_pgm(dir / ("obj" + std::to_string(label + 1) + "__" + std::to_string(count[static_cast<std::size_t>(label)]++) + ".pgm"), img);
    }
    return dir;
}

}  // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig c = parse_experiment_config(
        R"({"dataset": {"source": "synthetic", "clusters": 4, "n_per_cluster": 7, "img_h": 4, "img_w": 4, "ambient_dim": 16},
            "pipeline": "wp-single-view", "solver": {"kind": "ssc", "params": {"alpha": 20}},
            "levels": 1, "split": {"in_fraction": 0.5}, "seeds": [3, 5], "output": "x"})");
    CHECK(c.pipeline == PipelineKind::WpSingleView);
    CHECK(c.dataset.uos.clusters == 4);
    CHECK(c.solver.kind == SolverKind::SSC);
    CHECK(c.solver.params.at("alpha") == "20");
    CHECK(c.levels == 1);
    CHECK(c.split.in_fraction == 0.5);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 5});
    CHECK(c.basis_dim() == 9);
    CHECK_FALSE(c.grid.has_value());

    const ExperimentConfig m = parse_experiment_config(R"({"pipeline": "wp-mera", "grid": "default-mera"})");
    CHECK(m.mera.lambda == 1e-4);
    CHECK(m.mera.rank == 3);
    REQUIRE(m.grid.has_value());
    CHECK(m.grid->points().size() == 190);

    const ExperimentConfig idx = parse_experiment_config(
        R"({"dataset": {"source": "idx", "images": "a", "labels": "b"}, "solver": {"params": {"alpha": 5}}})");
    CHECK(idx.basis_dim() == 12);

    CHECK(kind_of([] { parse_experiment_config(R"({"pipline": "wp-mera"})"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_experiment_config(R"({"dataset": {"sauce": 1}})"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_experiment_config(R"({"pipeline": "wp-mera", "mera": {"lambda": 1, "rank": 2}})"); }) ==
          ErrorKind::Config);
    CHECK(kind_of([] { parse_experiment_config("{not json"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_experiment_config(R"({"pipeline": "fancy"})"); }) == ErrorKind::Config);
    CHECK(kind_of([] { parse_experiment_config(R"({"dataset": {"source": "pgm"}})"); }) == ErrorKind::Config);
    CHECK(exit_code_for(ErrorKind::Config) == 2);
    CHECK(exit_code_for(ErrorKind::NoGrid) == 2);
    CHECK(exit_code_for(ErrorKind::Format) == 3);
    CHECK(exit_code_for(ErrorKind::Convergence) == 4);
}

TEST_CASE("prime in-sample size fails at validation") {
    const fs::path dir = testsupport::scratch_dir("exp_prime");
    Labels labels;
    for (int j = 0; j < 13; ++j) labels.push_back(j < 6 ? 0 : 1);
    save_bundle(dir / "d.wpsc", Dataset(testsupport::random_matrix(64, 13, 2), 8, 8, labels, "prime"));
    json cfg{{"dataset", {{"source", "bundle"}, {"path", (dir / "d.wpsc").string()}}},
             {"pipeline", "wp-mera"},
             {"split", {{"in_fraction", 1.0}}},
             {"output", (dir / "out").string()}};
    const ExperimentConfig c = parse_experiment_config(cfg.dump());
    try {
        run_experiment(c);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "validate");
        CHECK(e.kind() == ErrorKind::NoGrid);
        CHECK(exit_code_for(e.kind()) == 2);
    }
    const json report = json::parse(slurp(dir / "out" / "report.json"));
    CHECK(report["error"]["stage"] == "validate");
    CHECK(report["error"]["kind"] == "no-grid");
    CHECK(report["dataset"]["size"] == 13);
    CHECK(report["runs"].empty());
}

TEST_CASE("wp-mera report is deterministic and echoes its hyperparameters") {
    const fs::path dir = testsupport::scratch_dir("exp_mera");
    const ExperimentConfig a = parse_experiment_config(synthetic_mera(dir / "a").dump());
    const ExperimentConfig b = parse_experiment_config(synthetic_mera(dir / "b").dump());
    const ExperimentOutcome oa = run_experiment(a);
    run_experiment(b);
    const std::string ra = slurp(dir / "a" / "report.json");
    const std::string rb = slurp(dir / "b" / "report.json");
    // the output path is echoed in the config block, so compare with it blanked
    json ja = json::parse(ra), jb = json::parse(rb);
    ja["config"].erase("output");
    jb["config"].erase("output");
    CHECK(ja.dump() == jb.dump());
    run_experiment(a);
    CHECK(slurp(dir / "a" / "report.json") == ra);

    const json& run = ja["runs"][0];
    CHECK(run["hyperparameters"]["lambda"] == 1e-4);
    CHECK(run["hyperparameters"]["R"] == 3);
    CHECK(run["in_size"] == 36);
    CHECK(run["out_size"] == 9);
    CHECK(run["metrics"]["in"]["acc"].get<double>() >= 0.95);
    CHECK(run["diagnostics"].size() == 5);
    CHECK(oa.in_acc.size() == 1);

    const auto rows = lines_of(slurp(dir / "a" / "metrics.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "dataset,pipeline,subband,seed,phase,acc,nmi,rand,f,purity,ce,seconds");
    CHECK(rows[1].rfind("uos,wp-mera,O+A+H+V+D,0,in,", 0) == 0);
    CHECK(rows[2].rfind("uos,wp-mera,O+A+H+V+D,0,out,", 0) == 0);
    CHECK(lines_of(slurp(dir / "a" / "trace.csv")).size() > 2);
}

TEST_CASE("wp-single-view on a pgm directory") {
    const fs::path pgm = pgm_fixture();
    const fs::path out = testsupport::scratch_dir("exp_pgm");
    json cfg{{"dataset", {{"source", "pgm"}, {"dir", pgm.string()}, {"name", "objects"}}},
             {"pipeline", "wp-single-view"},
             {"solver", {{"kind", "ssc"}, {"params", {{"alpha", 20}}}}},
             {"levels", 2},
             {"d", 2},
             {"validation", {{"per_cluster", 6}}},
             {"seeds", {1, 2}},
             {"export_bundles", true},
             {"output", out.string()}};
    const ExperimentOutcome o = run_experiment(parse_experiment_config(cfg.dump()));
    const json report = json::parse(slurp(o.report));
    CHECK(report["dataset"]["clusters"] == 5);
    CHECK(report["dataset"]["img_h"] == 16);
    REQUIRE(report["runs"].size() == 2);
    for (const json& run : report["runs"]) {
        REQUIRE(run["chosen_subband"].is_string());
        const int evals = run["selection"]["evaluations"];
        CHECK((evals == 5 || evals == 9));
        CHECK(run["selection"]["evaluated"].size() == static_cast<std::size_t>(evals));
        CHECK(run["selection"]["evaluated"][0]["subband"] == "O");
        for (const json& e : run["selection"]["evaluated"]) {
            CHECK(e["ce"].get<double>() >= 0.0);
            CHECK(e["ce"].get<double>() <= 1.0);
        }
    }
    const auto trace = lines_of(slurp(o.trace));
    CHECK(trace[0] == "seed,order,subband,level,ce,chosen,note");
    const auto metrics = lines_of(slurp(o.metrics));
    CHECK(metrics.size() == 5);
    CHECK(o.out_acc.size() == 2);
    CHECK(fs::exists(out / "bundles" / "objects__O__seed1.wpsc"));
    CHECK(fs::exists(out / "bundles" / "objects__AA__seed2.wpsc"));
    const Dataset aa = load_bundle(out / "bundles" / "objects__AA__seed2.wpsc");
    CHECK(aa.img_h() == 16);
}

TEST_CASE("perfect clustering row and append") {
    const fs::path out = testsupport::scratch_dir("exp_append");
    json cfg{{"dataset",
              {{"source", "synthetic"}, {"name", "easy"}, {"clusters", 3}, {"subspace_dim", 3},
               {"ambient_dim", 60}, {"n_per_cluster", 20}, {"seed", 2}}},
             {"pipeline", "single-view"},
             {"solver", {{"kind", "ssc"}, {"params", {{"alpha", 20}}}}},
             {"d", 3},
             {"seeds", {7}},
             {"append", true},
             {"output", out.string()}};
    const ExperimentConfig c = parse_experiment_config(cfg.dump());
    run_experiment(c);
    const auto first = lines_of(slurp(out / "metrics.csv"));
    REQUIRE(first.size() == 3);
    CHECK(first[1].rfind("easy,single-view,O,7,in,1,1,1,1,1,0,", 0) == 0);
    CHECK(first[2].rfind("easy,single-view,O,7,out,1,", 0) == 0);
    run_experiment(c);
    const auto second = lines_of(slurp(out / "metrics.csv"));
    CHECK(second.size() == 5);
    int headers = 0;
    for (const auto& l : second) headers += l.rfind("dataset,", 0) == 0;
    CHECK(headers == 1);
}

TEST_CASE("grid search inside an experiment") {
    const fs::path out = testsupport::scratch_dir("exp_grid");
    json cfg{{"dataset",
              {{"source", "synthetic"}, {"clusters", 2}, {"subspace_dim", 2}, {"ambient_dim", 30},
               {"n_per_cluster", 20}, {"noise_sigma", 0.05}, {"seed", 5}}},
             {"pipeline", "single-view"},
             {"solver", {{"kind", "ssc"}, {"params", {{"alpha", 20}}}}},
             {"grid", {{"axes", {{"alpha", {5, 50}}}}, {"n_val_subsets", 2}, {"val_size_per_cluster", 6}}},
             {"output", out.string()}};
    const ExperimentOutcome o = run_experiment(parse_experiment_config(cfg.dump()));
    const json report = json::parse(slurp(o.report));
    CHECK(report["runs"][0]["grid"]["points"] == 2);
    const std::string best = report["runs"][0]["grid"]["best"]["alpha"];
    CHECK(report["runs"][0]["hyperparameters"]["params"]["alpha"] == best);
    CHECK(fs::exists(out / "grid.csv"));
}
