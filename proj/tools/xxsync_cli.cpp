// xxsync: command-line front end.
//
//   xxsync <dfs|simulate|predict|compare|oracle> (--config FILE | --preset NAME)
//          [--out DIR] [--sweep PARAM:RANGE] [--seed N]
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 physicality abort.

#include "xxsync/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>

namespace {

using namespace xxsync;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPhysicality = 3;

struct Options {
    std::string config;
    std::string preset;
    std::string out;
    std::string sweep;
    long seed{0};
};

void print_dfs(const DfsCommandResult& r) {
    const auto& d = r.report;
    std::cout << "N = " << d.N << ", g = " << d.g << ", r = " << d.r << (d.thermal ? " (thermal noise)" : "") << '\n';
    std::cout << "dark labels:";
    for (int n : d.labels) std::cout << ' ' << n;
    std::cout << "\nsector dimensions:";
    for (auto s : d.sector_dims) std::cout << ' ' << s;
    std::cout << "\nDFS dimension: " << d.total_dim << '\n';
    std::cout << "generic synchronization: " << (d.generic_sync ? "yes" : "no");
    if (d.sync_sign) std::cout << (*d.sync_sign > 0 ? " (in phase)" : " (anti-phase)");
    std::cout << "\ndarkness check: " << (r.darkness.passed ? "passed" : "FAILED")
              << " (jump residual " << r.darkness.max_jump_residual << ", energy residual "
              << r.darkness.max_energy_residual << ")\n";
}

// Runs one command for one configuration; returns its exit code.
int run_one(const std::string& command, const ExperimentConfig& cfg, bool quiet) {
    if (command == "dfs") {
        const auto r = cmd_dfs(cfg);
        if (!quiet) print_dfs(r);
        return r.darkness.passed ? 0 : kExitRuntime;
    }
    if (command == "simulate") {
        const auto r = cmd_simulate(cfg);
        if (!quiet) std::cout << r.summary.dump(2) << '\n';
        return 0;
    }
    if (command == "predict") {
        const auto r = cmd_predict(cfg);
        if (!quiet) std::cout << r.json["verdict"].dump(2) << '\n';
        return 0;
    }
    if (command == "compare") {
        const auto r = cmd_compare(cfg);
        if (!quiet) std::cout << r.json.dump(2) << '\n';
        return r.reached_cutoff ? 0 : kExitRuntime;
    }
    const auto r = cmd_oracle(cfg);
    if (!quiet) std::cout << r.json.dump(2) << '\n';
    return 0;
}

int guarded(const std::function<int()>& body, const std::string& label) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << label << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const PhysicalityError& e) {
        std::cerr << label << "physicality abort: " << e.what() << '\n';
        return kExitPhysicality;
    } catch (const std::exception& e) {
        std::cerr << label << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int run_sweep(const std::string& command, const ExperimentConfig& base, const SweepSpec& sweep) {
    std::vector<ExperimentConfig> jobs;
    for (double v : sweep.values) jobs.push_back(apply_sweep_value(base, sweep.parameter, v));

    const unsigned workers = std::max(1U, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(jobs.size())));
    std::atomic<std::size_t> next{0};
    std::vector<int> codes(jobs.size(), 0);
    std::mutex log;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < jobs.size(); i = next++) {
                const std::string label = jobs[i].output_dir.string() + ": ";
                codes[i] = guarded([&] { return run_one(command, jobs[i], true); }, label);
                std::lock_guard lock(log);
                std::cout << label << (codes[i] == 0 ? "ok" : "exit " + std::to_string(codes[i])) << '\n';
            }
        });
    }
    for (auto& t : pool) t.join();
    return *std::max_element(codes.begin(), codes.end());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchronization in dissipative XX spin chains"};
    app.require_subcommand(1);

    Options opt;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"dfs", "Decoherence-free subspace analysis"},
        {"simulate", "Integrate the master equation and run the configured analyses"},
        {"predict", "Closed-form asymptotic series and synchronization verdict"},
        {"compare", "Simulation against the closed form after the transient"},
        {"oracle", "Peripheral Liouvillian spectrum (N <= 6)"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        auto* c = sub->add_option("--config", opt.config, "Experiment configuration (JSON)");
        auto* p = sub->add_option("--preset", opt.preset, "Shipped preset: fig1a, fig1b, fig2");
        c->excludes(p);
        sub->add_option("--out", opt.out, "Output directory (overrides the configuration)");
        sub->add_option("--sweep", opt.sweep, "PARAM:START:STOP:COUNT or PARAM:V1,V2,...");
        sub->add_option("--seed", opt.seed, "Reserved; the dynamics is deterministic");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    return guarded(
        [&] {
            if (opt.config.empty() == opt.preset.empty()) throw ConfigError("exactly one of --config or --preset is required");
            ExperimentConfig cfg = opt.config.empty() ? load_preset(opt.preset) : load_config(opt.config);
            if (!opt.out.empty()) cfg.output_dir = opt.out;
            if (!opt.sweep.empty()) return run_sweep(command, cfg, parse_sweep(opt.sweep));
            return run_one(command, cfg, false);
        },
        "");
}
