#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcsvr/cli.hpp"
#include "gcsvr/panel_io.hpp"
#include "gcsvr/run_config.hpp"
#include "gcsvr/synthetic.hpp"

using namespace gcsvr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli_io") {

TEST_CASE("load_panel: complete file, missing cells, validation") {
    const fs::path dir = fresh_dir("gcsvr_panel_test");
    write_text(dir / "panel.csv",
               "date,station_id,value\n"
               "2021-01-01,s1,10\n2021-01-01,s2,20\n"
               "2021-01-02,s1,11\n2021-01-02,s2,21\n"
               "2021-01-03,s1,12\n2021-01-03,s2,22\n");
    const PanelSeries p = load_panel(dir / "panel.csv");
    CHECK(p.days() == 3);
    CHECK(p.stations() == 2);
    CHECK_FALSE(p.any_missing());
    CHECK(p.value(2, 1) == 22.0);

    write_text(dir / "gap.csv",
               "date,station_id,value\n"
               "2021-01-01,s1,10\n2021-01-01,s2,20\n"
               "2021-01-02,s2,21\n"
               "2021-01-03,s1,12\n2021-01-03,s2,22\n");
    const PanelSeries gap = load_panel(dir / "gap.csv");
    CHECK(gap.missing(1, 0));
    CHECK_FALSE(gap.missing(1, 1));

    write_text(dir / "dup.csv",
               "date,station_id,value\n"
               "2021-01-01,s1,10\n"
               "2021-01-01,s1,11\n");
    try {
        load_panel(dir / "dup.csv");
        FAIL("expected duplicate rejection");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);  // offending line
    }

    const std::vector<std::string> known = {"s1"};
    write_text(dir / "unknown.csv", "date,station_id,value\n2021-01-01,zz,1\n");
    CHECK_THROWS_AS(load_panel(dir / "unknown.csv", &known), std::invalid_argument);

    write_text(dir / "badhdr.csv", "day,station,v\n");
    CHECK_THROWS_AS(load_panel(dir / "badhdr.csv"), std::invalid_argument);
    write_text(dir / "badval.csv", "date,station_id,value\n2021-01-01,s1,abc\n");
    CHECK_THROWS_AS(load_panel(dir / "badval.csv"), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("panel csv write/read round trip preserves values and mask") {
    SyntheticSpec spec;
    spec.nodes = 3;
    spec.days = 15;
    spec.seed = 21;
    const SyntheticData data = generate_synthetic(spec);
    const fs::path dir = fresh_dir("gcsvr_panel_rt");
    write_panel_csv(data.panel, dir / "panel.csv");
    std::vector<std::string> ids = data.panel.station_ids();
    const PanelSeries back = load_panel(dir / "panel.csv", &ids);
    CHECK(back.values() == data.panel.values());
    CHECK(back.start_day() == data.panel.start_day());
    fs::remove_all(dir);
}

TEST_CASE("scores.csv loader") {
    const fs::path dir = fresh_dir("gcsvr_scores_test");
    write_text(dir / "scores.csv",
               "task,model,score\n"
               "t1,a,0.5\nt1,b,0.7\n"
               "t2,a,0.4\nt2,b,0.6\n");
    const ScoreTable table = load_scores_csv(dir / "scores.csv");
    CHECK(table.tasks == std::vector<std::string>{"t1", "t2"});
    CHECK(table.models == std::vector<std::string>{"a", "b"});
    CHECK(table.scores(1, 1) == 0.6);

    write_text(dir / "hole.csv", "task,model,score\nt1,a,0.5\nt2,b,0.7\n");
    CHECK_THROWS_AS(load_scores_csv(dir / "hole.csv"), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("run config: defaults, file, overrides, unknown keys") {
    const fs::path dir = fresh_dir("gcsvr_cfg_test");
    write_text(dir / "run.cfg",
               "# comment\n"
               "seed = 42\n"
               "gcn.epochs = 7\n"
               "svr.gamma = scale\n"
               "horizon = 60\n"
               "conformal.scaler = constant\n");
    RunConfig cfg = load_run_config(dir / "run.cfg");
    CHECK(cfg.seed == 42);
    CHECK(cfg.gcn.seed == 42);
    CHECK(cfg.gcn.epochs == 7);
    CHECK(cfg.horizon == 60);
    CHECK(cfg.conformal.scaler == ConformalConfig::Scaler::constant);
    CHECK(cfg.gcn.input_window == 24);  // untouched default
    CHECK(cfg.svr.C == 100.0);

    apply_config_kv(cfg, "svr.gamma", "0.125");
    CHECK_FALSE(cfg.svr.gamma_scale);
    CHECK(cfg.svr.gamma_fixed == 0.125);

    CHECK_THROWS_AS(apply_config_kv(cfg, "nope", "1"), std::invalid_argument);
    CHECK_THROWS_AS(apply_config_kv(cfg, "horizon", "45"), std::invalid_argument);

    const auto echo = config_echo(cfg);
    CHECK(echo.at("seed") == "42");
    CHECK(echo.at("gcn.epochs") == "7");
    CHECK(echo.count("jobs") == 0);
    fs::remove_all(dir);
}

TEST_CASE("generate_synthetic: determinism and degenerate noise") {
    SyntheticSpec spec;
    spec.nodes = 4;
    spec.days = 30;
    spec.seed = 5;
    const SyntheticData a = generate_synthetic(spec);
    const SyntheticData b = generate_synthetic(spec);
    CHECK(a.panel.values() == b.panel.values());
    CHECK(a.stations[2].lat == b.stations[2].lat);

    SyntheticSpec quiet = spec;
    quiet.noise_sigma = 0.0;
    quiet.coupling = 0.0;
    const SyntheticData c = generate_synthetic(quiet);
    for (double v : c.panel.values().values()) CHECK(v == quiet.base_level);

    SyntheticSpec bad = spec;
    bad.ar_coeff = 1.0;
    CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
}

TEST_CASE("generate_synthetic: zero coupling decorrelates non-neighbors") {
    SyntheticSpec spec;
    spec.nodes = 6;
    spec.topology = SyntheticSpec::Topology::ring;
    spec.days = 2000;
    spec.coupling = 0.0;
    spec.seed = 6;
    const SyntheticData data = generate_synthetic(spec);
    // sample cross-correlation between stations 0 and 3 (not ring neighbors)
    const std::size_t t_len = data.panel.days();
    double m0 = 0.0, m3 = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        m0 += data.panel.value(t, 0);
        m3 += data.panel.value(t, 3);
    }
    m0 /= static_cast<double>(t_len);
    m3 /= static_cast<double>(t_len);
    double cov = 0.0, v0 = 0.0, v3 = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        const double d0 = data.panel.value(t, 0) - m0;
        const double d3 = data.panel.value(t, 3) - m3;
        cov += d0 * d3;
        v0 += d0 * d0;
        v3 += d3 * d3;
    }
    CHECK(std::abs(cov / std::sqrt(v0 * v3)) < 0.1);
}

TEST_CASE("generate_synthetic: suggested kernel parameters reproduce the topology") {
    for (auto topo : {SyntheticSpec::Topology::ring, SyntheticSpec::Topology::grid,
                      SyntheticSpec::Topology::two_cluster}) {
        SyntheticSpec spec;
        spec.nodes = 8;
        spec.topology = topo;
        spec.days = 5;
        spec.seed = 7;
        const SyntheticData data = generate_synthetic(spec);
        const StationNetwork net =
            build_adjacency(data.stations, data.suggested_sigma_sq, data.suggested_eps);
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                CHECK((net.adjacency()(i, j) > 0.0) == (data.generator_adjacency(i, j) > 0.0));
            }
        }
    }
}

TEST_CASE("cli: full pipeline smoke with evaluate, mcb and conformal") {
    const fs::path dir = fresh_dir("gcsvr_cli_smoke");
    const std::string out = dir.string();
    const std::vector<std::string> small_gcn = {
        "--set", "gcn.input_window=6",  "--set", "gcn.hidden_dim=6",
        "--set", "gcn.embed_dim=3",     "--set", "gcn.epochs=8"};

    auto with_small = [&](std::vector<std::string> args) {
        for (const auto& extra : small_gcn) args.push_back(extra);
        return args;
    };

    CHECK(run_cli({"synth", "--nodes", "4", "--days", "220", "--seed", "3", "--out", out}) == 0);
    CHECK(fs::exists(dir / "stations.csv"));
    CHECK(fs::exists(dir / "truth.json"));

    CHECK(run_cli(with_small({"train", "--stations", out + "/stations.csv", "--panel",
                              out + "/panel.csv", "--out", out, "--seed", "3",
                              "--train-end", "2019-07-20"})) == 0);
    CHECK(fs::exists(dir / "gcn.model"));
    CHECK(fs::exists(dir / "svr_s0.model"));

    CHECK(run_cli({"forecast", "--model-dir", out, "--panel", out + "/panel.csv", "--origin",
                   "2019-07-20", "--horizon", "5", "--out", out}) == 0);
    {
        nlohmann::json j;
        std::ifstream in(dir / "forecasts.json");
        in >> j;
        CHECK(j.at("horizon") == 5);
        CHECK(j.at("points").size() == 4);
        CHECK(j.at("points").at("s0").size() == 5);
    }

    CHECK(run_cli({"evaluate", "--forecasts", out + "/forecasts.json", "--panel",
                   out + "/panel.csv", "--out", out}) == 0);
    {
        nlohmann::json j;
        std::ifstream in(dir / "metrics.json");
        in >> j;
        const auto& avg = j.at("windows").begin().value().at("average");
        for (const char* key : {"mae", "mase", "rmse", "smape", "pinball", "crps"}) {
            CHECK(avg.contains(key));
        }
    }

    write_text(dir / "scores.csv",
               "task,model,score\n"
               "t1,a,1\nt1,b,2\nt1,c,3\n"
               "t2,a,1\nt2,b,2\nt2,c,3\n");
    CHECK(run_cli({"mcb", "--scores", out + "/scores.csv", "--theta", "0.05", "--out", out}) == 0);
    {
        const std::string mcb = read_text(dir / "mcb.csv");
        CHECK(mcb.find("model,mean_rank,cd,flagged") != std::string::npos);
        CHECK(std::count(mcb.begin(), mcb.end(), '\n') == 4);  // header + 3 models
    }

    CHECK(run_cli(with_small({"conformal", "--stations", out + "/stations.csv", "--panel",
                              out + "/panel.csv", "--out", out, "--seed", "3", "--test-start",
                              "2019-07-01", "--horizon", "30", "--set", "conformal.upsilon=20"})) ==
          0);
    CHECK(fs::exists(dir / "intervals.csv"));
    {
        nlohmann::json j;
        std::ifstream in(dir / "coverage.json");
        in >> j;
        CHECK(j.at("pooled").get<double>() >= 0.0);
        CHECK(j.at("per_station").size() == 4);
    }

    // validation failures exit 1
    CHECK(run_cli({"bogus-subcommand"}) == 1);
    CHECK(run_cli({"mcb", "--scores", out + "/missing.csv"}) == 1);
    CHECK(run_cli({"train", "--stations", out + "/stations.csv", "--panel",
                   out + "/nope.csv"}) == 1);
    fs::remove_all(dir);
}

TEST_CASE("cli: jobs degree does not change forecasts.json or metrics.json bytes") {
    const fs::path dir = fresh_dir("gcsvr_cli_determinism");
    const std::string out = dir.string();
    const std::vector<std::string> cfg = {
        "--set", "gcn.input_window=6", "--set", "gcn.hidden_dim=4",
        "--set", "gcn.embed_dim=2",    "--set", "gcn.epochs=5"};

    REQUIRE(run_cli({"synth", "--nodes", "3", "--days", "160", "--seed", "11", "--out", out}) ==
            0);

    auto pipeline = [&](const std::string& jobs) {
        std::vector<std::string> train = {"train", "--stations", out + "/stations.csv",
                                          "--panel", out + "/panel.csv", "--out", out,
                                          "--seed", "11", "--jobs", jobs,
                                          "--train-end", "2019-05-20"};
        for (const auto& extra : cfg) train.push_back(extra);
        REQUIRE(run_cli(train) == 0);
        REQUIRE(run_cli({"forecast", "--model-dir", out, "--panel", out + "/panel.csv",
                         "--origin", "2019-05-20", "--horizon", "7", "--out", out}) == 0);
        REQUIRE(run_cli({"evaluate", "--forecasts", out + "/forecasts.json", "--panel",
                         out + "/panel.csv", "--out", out}) == 0);
        return std::make_pair(read_text(dir / "forecasts.json"), read_text(dir / "metrics.json"));
    };

    const auto serial = pipeline("1");
    const auto parallel = pipeline("4");
    CHECK(serial.first == parallel.first);
    CHECK(serial.second == parallel.second);
    fs::remove_all(dir);
}

}  // TEST_SUITE
