#include "xxsync/commands.hpp"
#include "xxsync/config.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace xxsync;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config(const fs::path& out) {
    return json{{"schema", "xxsync.experiment/1"},
                {"chain", {{"N", 5}, {"omega", 0.4}, {"J", 0.15}}},
                {"noise", {{"sites", {2, 4}}, {"rates", {0.05, 0.05}}}},
                {"initial_state", {"plus", "zero", "zero", "zero", json::array({json::array({0.6, 0.0}), json::array({0.0, 0.8})})}},
                {"integrator", {{"dt", 0.05}, {"t_max", 1200.0}, {"record_stride", 10}}},
                {"analyses", {{"spectrum_t_start", 100.0}, {"compare", true}, {"predict", true}}},
                {"output_dir", out.string()}};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("xxsync_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(XXSYNC_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round trip") {
    const auto cfg = parse_config(small_config("somewhere"));
    CHECK(cfg.chain.N == 5);
    CHECK(cfg.initial_state[0].name == std::optional<std::string>("plus"));
    CHECK_FALSE(cfg.initial_state[4].name.has_value());
    CHECK(cfg.initial_state[4].state.one == cplx(0.0, 0.8));
    const auto again = parse_config(config_to_json(cfg));
    CHECK(again == cfg);
    CHECK(config_to_json(again).dump() == config_to_json(cfg).dump());
}

TEST_CASE("presets load and round trip") {
    for (const char* name : {"fig1a", "fig1b", "fig2"}) {
        const auto cfg = load_preset(name);
        CHECK(cfg.chain.N == 11);
        CHECK(cfg.chain.omega == 0.4);
        CHECK(cfg.chain.J == 0.15);
        CHECK(cfg.integrator.dt == 0.05);
        CHECK(cfg.integrator.t_max >= 4000.0);
        for (double g : cfg.noise.rates) CHECK(g == 0.05);
        CHECK(parse_config(config_to_json(cfg)) == cfg);
    }
    CHECK(load_preset("fig1a").noise.sites == std::vector<int>{6});
    CHECK(load_preset("fig1b").noise.sites == std::vector<int>{2, 4, 6, 8, 10});
    CHECK(excitation_support(load_preset("fig2").qubits()) == 2);
    CHECK_THROWS_AS(load_preset("missing"), ConfigError);
}

TEST_CASE("config rejects malformed input") {
    const auto base = small_config("x");
    auto bad = base;
    bad["chain"]["n"] = 3;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["extra"] = true;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["schema"] = "xxsync.experiment/0";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["integrator"]["method"] = "euler";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["integrator"]["dt"] = 5000.0;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["initial_state"][1] = "up";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["initial_state"][1] = json::array({1.0, 1.0});
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["initial_state"].erase(0);
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["noise"]["sites"] = {2, 9};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["noise"]["rates"] = "fast";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad.erase("chain");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base;
    bad["analyses"]["plot"] = true;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("sweep arguments") {
    const auto a = parse_sweep("gamma:0.01:0.05:5");
    CHECK(a.parameter == "gamma");
    REQUIRE(a.values.size() == 5);
    CHECK(a.values.front() == doctest::Approx(0.01));
    CHECK(a.values.back() == doctest::Approx(0.05));
    const auto b = parse_sweep("J:0.1,0.2");
    CHECK(b.values == std::vector<double>{0.1, 0.2});
    CHECK_THROWS_AS(parse_sweep("delta:1:2:3"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("gamma"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("gamma:1:2"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("gamma:a,b"), ConfigError);

    const auto cfg = parse_config(small_config("base"));
    const auto swept = apply_sweep_value(cfg, "gamma", 0.2);
    CHECK(swept.noise.rates == std::vector<double>{0.2, 0.2});
    CHECK(swept.output_dir != cfg.output_dir);
    CHECK_THROWS_AS(apply_sweep_value(cfg, "gamma", -1.0), ConfigError);
}

TEST_CASE("commands produce their files") {
    const auto dir = scratch("commands");
    auto cfg = parse_config(small_config(dir));
    const auto dfs = cmd_dfs(cfg);
    CHECK(dfs.report.g == 2);
    CHECK(dfs.darkness.passed);
    CHECK(fs::exists(dir / "dfs.json"));

    const auto sim = cmd_simulate(cfg);
    for (const char* f : {"trajectory.csv", "pearson.csv", "spectrum.csv", "spectrum_full.csv", "concurrence.csv",
                          "summary.json", "verdict.json", "prediction.csv"}) {
        CHECK_MESSAGE(fs::exists(dir / f), f);
    }
    CHECK(sim.trajectory.times.size() == 2401);
    CHECK(sim.concurrence.size() == 2401);

    const auto pred = cmd_predict(cfg);
    CHECK(pred.verdict.generic);
    CHECK(pred.state.source == AsymptoticSource::empirical);

    auto small = cfg;
    small.chain.N = 3;
    small.noise = NoiseSpec{{2}, {0.05}, std::nullopt};
    small.initial_state.resize(3);
    const auto orc = cmd_oracle(small);
    CHECK(orc.spectrum.count == 4);
    CHECK(orc.max_frequency_mismatch < 1e-8);
    CHECK(fs::exists(dir / "peripheral.csv"));
    CHECK(fs::exists(dir / "oracle.json"));
}

TEST_CASE("default Pearson window") {
    const ChainSpec chain{11, 0.4, 0.15};
    const auto rep = gcd_analysis(NoiseSpec{{2, 4, 6, 8, 10}, std::vector<double>(5, 0.05), std::nullopt}, 11);
    CHECK(default_pearson_window(rep, chain) == doctest::Approx(2.0 * 2.0 * std::numbers::pi / 0.4));
    const auto empty = gcd_analysis(NoiseSpec{{1}, {0.05}, std::nullopt}, 11);
    CHECK(default_pearson_window(empty, chain) == 100.0);
    const auto diffs = dfs_energy_differences(rep, chain);
    REQUIRE(diffs.size() == 4);
    CHECK(diffs.front() == doctest::Approx(-0.4));
    CHECK(diffs.back() == doctest::Approx(0.4));
}

TEST_CASE("CLI outputs are deterministic") {
    const auto dir = scratch("determinism");
    const auto cfg_path = dir / "cfg.json";
    std::ofstream(cfg_path) << small_config(dir / "run").dump(2);
    REQUIRE(run_cli("simulate --config " + cfg_path.string() + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli("simulate --config " + cfg_path.string() + " --out " + (dir / "b").string()) == 0);
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const auto name = entry.path().filename();
        if (name == "config.json") continue;  // records the output directory
        CHECK_MESSAGE(slurp(entry.path()) == slurp(dir / "b" / name), name.string());
        ++compared;
    }
    CHECK(compared >= 8);
}

TEST_CASE("CLI exit codes") {
    const auto dir = scratch("exit");
    CHECK(run_cli("dfs --preset fig1b --out " + (dir / "ok").string()) == 0);
    CHECK(run_cli("dfs --preset no_such_preset") == 2);
    CHECK(run_cli("dfs") == 2);
    CHECK(run_cli("frobnicate") == 2);

    auto bad = small_config(dir / "bad");
    bad["chain"]["omega"] = "fast";
    std::ofstream(dir / "bad.json") << bad.dump();
    CHECK(run_cli("simulate --config " + (dir / "bad.json").string()) == 2);

    // RK4 far outside its stability region violates positivity.
    auto unstable = small_config(dir / "unstable");
    unstable["chain"]["J"] = 3.0;
    unstable["noise"]["rates"] = {2.0, 2.0};
    unstable["integrator"] = {{"dt", 0.6}, {"t_max", 200.0}, {"record_stride", 1}, {"positivity_check_every", 1}};
    std::ofstream(dir / "unstable.json") << unstable.dump();
    CHECK(run_cli("simulate --config " + (dir / "unstable.json").string()) == 3);

    CHECK(run_cli("dfs --preset fig1a --sweep gamma:0.01,0.02 --out " + (dir / "sweep").string()) == 0);
    CHECK(fs::exists(dir / "sweep" / "gamma_0.01" / "dfs.json"));
    CHECK(fs::exists(dir / "sweep" / "gamma_0.02" / "dfs.json"));
}
