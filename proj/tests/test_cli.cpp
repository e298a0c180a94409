#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef WPSC_CLI
#error "WPSC_CLI must point at the wpsc executable"
#endif

namespace {

struct Run {
    int code = -1;
    std::string out;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Run cli(const fs::path& dir, const std::string& args) {
    const fs::path log = dir / "stdout.txt";
    const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(WPSC_CLI) + "' " + args + " > '" +
                            log.string() + "' 2> '" + (dir / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(log);
    return r;
}

const char* kSynth = "synth --clusters 3 --subspace-dim 2 --ambient-dim 64 --per-cluster 12 --img-h 8 --img-w 8 "
                     "--seed 1 -o d.wpsc";

}  // namespace

TEST_CASE("synth, cluster and eval") {
    const fs::path dir = testsupport::scratch_dir("cli_basic");
    REQUIRE(cli(dir, kSynth).code == 0);
    CHECK(fs::exists(dir / "d.wpsc"));

    const Run c = cli(dir, "cluster -i d.wpsc --solver ssc -p alpha=20 --labels-out p.txt");
    REQUIRE(c.code == 0);
    const json j = json::parse(c.out);
    CHECK(j["metrics"]["acc"] == 1.0);
    CHECK(fs::exists(dir / "p.txt"));

    const Run again = cli(dir, "cluster -i d.wpsc --solver ssc -p alpha=20 --labels-out q.txt");
    CHECK(slurp(dir / "p.txt") == slurp(dir / "q.txt"));

    const Run e = cli(dir, "eval --truth p.txt --pred q.txt");
    REQUIRE(e.code == 0);
    CHECK(json::parse(e.out)["metrics"]["nmi"] == 1.0);
}

TEST_CASE("wavelet, selection, mera and oos subcommands") {
    const fs::path dir = testsupport::scratch_dir("cli_wp");
    REQUIRE(cli(dir, kSynth).code == 0);
    REQUIRE(cli(dir, "wpt -i d.wpsc -J 2 -o wp").code == 0);
    int nodes = 0;
    for (const auto& entry : fs::directory_iterator(dir / "wp")) nodes += entry.path().extension() == ".wpsc";
    CHECK(nodes == 21);

    const Run s = cli(dir, "select-subband -i d.wpsc -p alpha=20 -J 2 --val-per-cluster 6 --trace-out t.csv");
    REQUIRE(s.code == 0);
    CHECK(slurp(dir / "t.csv").rfind("order,subband,level,ce,chosen,note\n", 0) == 0);
    CHECK(s.out.find("chosen: ") != std::string::npos);

    const Run m = cli(dir, "mera -i d.wpsc --lambda 1e-4 -R 3 --labels-out m.txt --trace-out mt.csv");
    REQUIRE(m.code == 0);
    const json mj = json::parse(m.out);
    CHECK(mj["R"] == 3);
    CHECK(mj["metrics"]["acc"].get<double>() >= 0.95);
    CHECK(fs::exists(dir / "mt.csv"));

    const Run o = cli(dir, "oos --train d.wpsc --test d.wpsc -d 2 --labels-out o.txt");
    REQUIRE(o.code == 0);
    CHECK(json::parse(o.out)["metrics"]["acc"] == 1.0);
}

TEST_CASE("exit codes") {
    const fs::path dir = testsupport::scratch_dir("cli_codes");
    REQUIRE(cli(dir, kSynth).code == 0);
    CHECK(cli(dir, "cluster --bogus").code == 2);
    CHECK(cli(dir, "cluster -i d.wpsc").code == 2);                       // SSC without alpha
    CHECK(cli(dir, "cluster -i d.wpsc -p alpha=20 --subband AX").code == 2);
    CHECK(cli(dir, "cluster -i missing.wpsc -p alpha=20").code == 3);
    CHECK(cli(dir, "cluster -i d.wpsc --solver lrr -p lambda=1 --max-iter 2").code == 4);
    {
        std::ofstream bad(dir / "bad.json");
        bad << R"({"pipeline": "wp-mera", "unknown": 1})";
    }
    CHECK(cli(dir, "run -c bad.json").code == 2);
    {
        std::ofstream missing(dir / "missing.json");
        missing << R"({"dataset": {"source": "pgm", "dir": "no_such_dir"}, "solver": {"params": {"alpha": 20}}})";
    }
    CHECK(cli(dir, "run -c missing.json -o out").code == 3);
    CHECK(fs::exists(dir / "out" / "report.json"));
}

TEST_CASE("run is deterministic and appends") {
    const fs::path dir = testsupport::scratch_dir("cli_run");
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << R"({"dataset": {"source": "synthetic", "name": "uos", "clusters": 3, "subspace_dim": 2,
                   "ambient_dim": 64, "n_per_cluster": 15, "seed": 3, "img_h": 8, "img_w": 8},
                   "pipeline": "wp-mera", "d": 2, "split": {"in_fraction": 0.8}, "seeds": [0]})";
    }
    REQUIRE(cli(dir, "run -c cfg.json -o out1").code == 0);
    REQUIRE(cli(dir, "run -c cfg.json -o out1").code == 0);
    const std::string first = slurp(dir / "out1" / "report.json");
    REQUIRE(cli(dir, "run -c cfg.json -o out1").code == 0);
    CHECK(slurp(dir / "out1" / "report.json") == first);

    REQUIRE(cli(dir, "run -c cfg.json -o out2 --seed 0 --seed 1").code == 0);
    REQUIRE(cli(dir, "run -c cfg.json -o out2 --seed 2 --append").code == 0);
    std::istringstream rows(slurp(dir / "out2" / "metrics.csv"));
    int headers = 0, lines = 0;
    for (std::string l; std::getline(rows, l); ++lines) headers += l.rfind("dataset,", 0) == 0;
    CHECK(headers == 1);
    CHECK(lines == 1 + 6);
}
