#include "xxsync/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace xxsync {

using nlohmann::json;

namespace {

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream os(cfg.output_dir / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (cfg.output_dir / name).string());
    return os;
}

void write_json(const ExperimentConfig& cfg, const std::string& name, const json& j) {
    auto os = open_output(cfg, name);
    os << j.dump(2) << '\n';
}

std::vector<int> all_sites(int N) {
    std::vector<int> s(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) s[static_cast<std::size_t>(i)] = i + 1;
    return s;
}

struct Setup {
    BasisPtr basis;
    DensityMatrix rho0;
    DfsReport report;
    DfsBasis dfs;
};

Setup prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto qubits = cfg.qubits();
    Setup s;
    s.basis = dynamics_basis(cfg.chain.N, excitation_support(qubits), cfg.noise);
    s.rho0 = embed_product_state(qubits, s.basis);
    s.report = gcd_analysis(cfg.noise, cfg.chain.N);
    s.dfs = build_dfs_basis(s.report, cfg.chain, s.basis, /*allow_truncation=*/true);
    return s;
}

json compare_json(const CompareResult& r) {
    return json{{"t_star", r.t_star},
                {"window_end", r.window_end},
                {"reached_cutoff", r.reached_cutoff},
                {"sites", r.sites},
                {"max_residual", r.max_residual},
                {"worst", r.worst},
                {"tolerance", 1e-4},
                {"passed", r.reached_cutoff && r.worst <= 1e-4}};
}

CompareResult compare_from(const ExperimentConfig& cfg, const Setup& setup, const SimulationResult& sim) {
    CompareResult out;
    out.sites = all_sites(cfg.chain.N);
    if (!sim.cutoff) {
        out.json = compare_json(out);
        return out;
    }
    out.reached_cutoff = true;
    out.t_star = sim.cutoff->time;
    out.window_end = std::min(out.t_star + cfg.analyses.compare_window, sim.trajectory.times.back());

    const AsymptoticState state = asymptotic_state_empirical(*sim.cutoff, setup.dfs);
    const TransitionTable table = transition_table(setup.dfs, out.sites);

    std::vector<double> times;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < sim.trajectory.times.size(); ++i) {
        const double t = sim.trajectory.times[i];
        if (t >= out.t_star && t <= out.window_end + 1e-9) {
            times.push_back(t);
            rows.push_back(i);
        }
    }
    for (std::size_t s = 0; s < out.sites.size(); ++s) {
        const auto pred = closed_form_series(state, table, out.sites[s], times);
        double worst = 0.0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            worst = std::max(worst, std::abs(pred[k] - sim.trajectory.sigma_x[rows[k]][s]));
        }
        out.max_residual.push_back(worst);
        out.worst = std::max(out.worst, worst);
    }
    out.json = compare_json(out);
    return out;
}

PredictionResult predict_from(const ExperimentConfig& cfg, const Setup& setup, const SimulationResult* sim) {
    PredictionResult out;
    out.report = setup.report;
    const auto sites = all_sites(cfg.chain.N);
    out.table = transition_table(setup.dfs, sites);
    out.verdict = classify_synchronization(setup.report, out.table);

    std::optional<SimulationResult> owned;
    try {
        out.state = asymptotic_state_analytic(setup.rho0, setup.dfs);
    } catch (const AnalyticUnavailable&) {
        if (!sim) {
            owned = cmd_simulate(cfg, false);
            sim = &*owned;
        }
        if (!sim->cutoff) {
            throw std::runtime_error("predict: transient cutoff not reached before t_max; increase t_max");
        }
        out.state = asymptotic_state_empirical(*sim->cutoff, setup.dfs);
    }

    const double interval = cfg.integrator.record_interval();
    const auto n = static_cast<long>(std::floor((cfg.integrator.t_max - out.state.t_ref) / interval + 1e-9));
    for (long i = 0; i <= n; ++i) out.times.push_back(out.state.t_ref + static_cast<double>(i) * interval);
    for (int s : sites) out.series.push_back(closed_form_series(out.state, out.table, s, out.times));
    if (setup.report.g == 2) out.asymptotic_concurrence = asymptotic_concurrence(out.state, setup.report);

    json amps = json::object();
    for (int s : {1, cfg.chain.N}) {
        json list = json::array();
        for (const auto& fa : frequency_amplitudes(out.state, out.table, s)) {
            list.push_back({{"frequency", fa.frequency},
                            {"frequency_cycles", fa.frequency / (2.0 * std::numbers::pi)},
                            {"amplitude", fa.amplitude},
                            {"degenerate", fa.degenerate}});
        }
        amps[std::to_string(s)] = list;
    }
    json verdict = out.verdict;
    json freq_cycles = json::array();
    for (double f : out.verdict.frequencies) freq_cycles.push_back(f / (2.0 * std::numbers::pi));
    verdict["frequencies_cycles"] = freq_cycles;
    out.json = json{{"verdict", verdict},
                    {"dfs", setup.report},
                    {"rho_inf_source", out.state.source == AsymptoticSource::analytic ? "analytic" : "empirical"},
                    {"t_ref", out.state.t_ref},
                    {"amplitudes", amps},
                    {"transitions", out.table},
                    {"asymptotic_concurrence",
                     out.asymptotic_concurrence ? json(*out.asymptotic_concurrence) : json(nullptr)}};
    return out;
}

void write_prediction(const ExperimentConfig& cfg, const PredictionResult& p) {
    auto os = open_output(cfg, "prediction.csv");
    os << "t";
    for (int s = 1; s <= cfg.chain.N; ++s) os << ",sx_" << s;
    os << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < p.times.size(); ++i) {
        os << p.times[i];
        for (const auto& series : p.series) os << ',' << series[i];
        os << '\n';
    }
    write_json(cfg, "verdict.json", p.json);
}

SimulationResult simulate_with(const ExperimentConfig& cfg, const Setup& setup, bool write_files) {
    SimulationResult out;
    out.report = setup.report;
    const int N = cfg.chain.N;
    const bool want_concurrence = cfg.analyses.concurrence && N >= 3;

    TransientMonitor monitor(setup.dfs, cfg.analyses.bright_threshold);
    Observer observer = [&](double t, const DensityMatrix& rho) {
        monitor(t, rho);
        if (want_concurrence) out.concurrence.push_back(concurrence(reduce_to_edge_pair(rho)));
    };
    out.trajectory = evolve(setup.rho0, cfg.chain, cfg.noise, cfg.integrator, all_sites(N), observer);
    out.bright_population = monitor.bright_population();
    out.cutoff = monitor.cutoff();

    const auto& times = out.trajectory.times;
    const auto x = out.trajectory.series(1);
    const auto y = out.trajectory.series(N);
    out.pearson_window = cfg.analyses.pearson_window.value_or(default_pearson_window(setup.report, cfg.chain));
    if (cfg.analyses.pearson) out.pearson = pearson(times, x, y, out.pearson_window);
    if (cfg.analyses.spectrum) {
        try {
            out.spectrum = fft_spectrum(times, x, cfg.analyses.spectrum_t_start);
        } catch (const std::invalid_argument&) {
            // Too few samples past the transient; the summary records the omission.
        }
    }

    json summary{{"dfs", setup.report},
                 {"basis_dim", setup.basis->dim()},
                 {"kmax", setup.basis->kmax()},
                 {"records", times.size()},
                 {"max_abs_trace_drift", 0.0},
                 {"min_eigenvalue_seen", out.trajectory.min_eigenvalue_seen},
                 {"pearson_window", out.pearson_window},
                 {"t_star", out.cutoff ? json(out.cutoff->time) : json(nullptr)}};
    double drift = 0.0;
    for (double d : out.trajectory.trace_drift) drift = std::max(drift, std::abs(d));
    summary["max_abs_trace_drift"] = drift;
    if (out.pearson) {
        const auto& pc = *out.pearson;
        summary["pearson_final"] = pc.defined.back() ? json(pc.pc.back()) : json(nullptr);
        const double settle = first_settling_time(pc, -1.0, 0.02);
        summary["pearson_settling_time_anti"] = settle >= 0 ? json(settle) : json(nullptr);
    }
    if (out.spectrum) {
        std::vector<double> f_cycles = out.spectrum->frequencies;
        summary["spectrum_peaks"] = f_cycles;
        summary["spectrum_resolution"] = out.spectrum->resolution;
    } else if (cfg.analyses.spectrum) {
        summary["spectrum_peaks"] = nullptr;
    }
    out.summary = summary;

    if (write_files) {
        {
            auto os = open_output(cfg, "trajectory.csv");
            write_trajectory_csv(os, out.trajectory);
        }
        if (out.pearson) {
            auto os = open_output(cfg, "pearson.csv");
            write_pearson_csv(os, *out.pearson);
        }
        if (out.spectrum) {
            auto os = open_output(cfg, "spectrum.csv");
            write_spectrum_csv(os, *out.spectrum);
            auto full = open_output(cfg, "spectrum_full.csv");
            write_spectrum_full_csv(full, *out.spectrum);
        }
        if (want_concurrence) {
            auto os = open_output(cfg, "concurrence.csv");
            os << "t,concurrence\n" << std::setprecision(17);
            for (std::size_t i = 0; i < times.size(); ++i) os << times[i] << ',' << out.concurrence[i] << '\n';
        }
        {
            auto os = open_output(cfg, "bright_population.csv");
            os << "t,bright_population\n" << std::setprecision(17);
            for (std::size_t i = 0; i < times.size(); ++i) os << times[i] << ',' << out.bright_population[i] << '\n';
        }
        for (const auto& snap : out.trajectory.snapshots) {
            std::ostringstream name;
            name << "snapshot_t" << std::fixed << std::setprecision(3) << snap.time << ".bin";
            auto os = open_output(cfg, name.str());
            write_snapshot(os, snap);
        }
        if (out.cutoff) {
            auto os = open_output(cfg, "snapshot_tstar.bin");
            write_snapshot(os, *out.cutoff);
        }
        write_json(cfg, "summary.json", out.summary);
        write_json(cfg, "config.json", config_to_json(cfg));
    }
    return out;
}

}  // namespace

double default_pearson_window(const DfsReport& report, const ChainSpec& chain) {
    double slowest = 0.0;
    for (int label : report.labels) {
        const double f = std::abs(single_excitation_mode(label, chain).energy) / (2.0 * std::numbers::pi);
        if (f > 1e-12 && (slowest == 0.0 || f < slowest)) slowest = f;
    }
    return slowest > 0.0 ? 2.0 / slowest : 100.0;
}

std::vector<double> dfs_energy_differences(const DfsReport& report, const ChainSpec& chain) {
    std::vector<double> mode;
    for (int label : report.labels) mode.push_back(single_excitation_mode(label, chain).energy);
    std::vector<double> energies;
    for (std::uint64_t subset = 0; subset < report.total_dim; ++subset) {
        double e = 0.0;
        for (std::size_t a = 0; a < mode.size(); ++a) {
            if ((subset >> a) & 1U) e += mode[a];
        }
        energies.push_back(e);
    }
    std::vector<double> diffs;
    for (double en : energies) {
        for (double em : energies) diffs.push_back(en - em);
    }
    std::sort(diffs.begin(), diffs.end());
    return diffs;
}

DfsCommandResult cmd_dfs(const ExperimentConfig& cfg, bool write_files) {
    cfg.validate();
    DfsCommandResult out;
    out.report = gcd_analysis(cfg.noise, cfg.chain.N);
    // Non-thermal DFS vectors need sectors 0..r; thermal checks need r+1 too.
    const int top = std::min(cfg.chain.N, out.report.r + 1);
    const BasisPtr basis = enumerate_sector(cfg.chain.N, top);
    const DfsBasis dfs = build_dfs_basis(out.report, cfg.chain, basis);
    out.darkness = verify_darkness(dfs, cfg.noise, build_hamiltonian(cfg.chain, basis));
    for (int label : out.report.labels) out.dark_energies.push_back(single_excitation_mode(label, cfg.chain).energy);

    out.json = out.report;
    out.json["dark_energies"] = out.dark_energies;
    out.json["darkness"] = {{"max_jump_residual", out.darkness.max_jump_residual},
                            {"max_energy_residual", out.darkness.max_energy_residual},
                            {"passed", out.darkness.passed},
                            {"states", dfs.states.size()}};
    if (write_files) write_json(cfg, "dfs.json", out.json);
    return out;
}

SimulationResult cmd_simulate(const ExperimentConfig& cfg, bool write_files) {
    const Setup setup = prepare(cfg);
    SimulationResult sim = simulate_with(cfg, setup, write_files);
    if (cfg.analyses.compare) {
        const CompareResult cmp = compare_from(cfg, setup, sim);
        sim.summary["compare"] = cmp.json;
        if (write_files) write_json(cfg, "compare.json", cmp.json);
    }
    if (cfg.analyses.predict) {
        const PredictionResult pred = predict_from(cfg, setup, &sim);
        sim.summary["predict"] = pred.json["verdict"];
        if (write_files) write_prediction(cfg, pred);
    }
    if (write_files && (cfg.analyses.compare || cfg.analyses.predict)) write_json(cfg, "summary.json", sim.summary);
    return sim;
}

PredictionResult cmd_predict(const ExperimentConfig& cfg, bool write_files) {
    const Setup setup = prepare(cfg);
    PredictionResult out = predict_from(cfg, setup, nullptr);
    if (write_files) write_prediction(cfg, out);
    return out;
}

CompareResult cmd_compare(const ExperimentConfig& cfg, bool write_files) {
    const Setup setup = prepare(cfg);
    const SimulationResult sim = simulate_with(cfg, setup, false);
    CompareResult out = compare_from(cfg, setup, sim);
    if (write_files) write_json(cfg, "compare.json", out.json);
    return out;
}

OracleResult cmd_oracle(const ExperimentConfig& cfg, bool write_files) {
    cfg.validate();
    OracleResult out;
    out.report = gcd_analysis(cfg.noise, cfg.chain.N);
    out.spectrum = liouvillian_peripheral_spectrum(cfg.chain, cfg.noise);
    out.expected_count = static_cast<std::size_t>(out.report.total_dim * out.report.total_dim);

    // Peripheral eigenvalues are -i (E_nu - E_mu); compare sorted multisets.
    std::vector<double> observed;
    for (const auto& ev : out.spectrum.eigenvalues) observed.push_back(-ev.imag());
    std::sort(observed.begin(), observed.end());
    const auto expected = dfs_energy_differences(out.report, cfg.chain);
    if (observed.size() == expected.size()) {
        for (std::size_t i = 0; i < observed.size(); ++i) {
            out.max_frequency_mismatch = std::max(out.max_frequency_mismatch, std::abs(observed[i] - expected[i]));
        }
    } else {
        out.max_frequency_mismatch = std::numeric_limits<double>::infinity();
    }
    out.json = json{{"count", out.spectrum.count},
                    {"expected_count", out.expected_count},
                    {"max_frequency_mismatch", std::isfinite(out.max_frequency_mismatch)
                                                   ? json(out.max_frequency_mismatch)
                                                   : json(nullptr)},
                    {"dfs", out.report},
                    {"passed", out.spectrum.count == out.expected_count && out.max_frequency_mismatch <= 1e-8}};
    if (write_files) {
        auto os = open_output(cfg, "peripheral.csv");
        write_peripheral_csv(os, out.spectrum);
        write_json(cfg, "oracle.json", out.json);
    }
    return out;
}

SweepSpec parse_sweep(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("--sweep: expected param:range");
    SweepSpec s;
    s.parameter = text.substr(0, colon);
    if (s.parameter != "gamma" && s.parameter != "J" && s.parameter != "omega" && s.parameter != "t_max") {
        throw ConfigError("--sweep: unknown parameter '" + s.parameter + "' (gamma, J, omega, t_max)");
    }
    const std::string range = text.substr(colon + 1);
    try {
        if (range.find(',') != std::string::npos) {
            std::stringstream ss(range);
            std::string item;
            while (std::getline(ss, item, ',')) s.values.push_back(std::stod(item));
        } else {
            std::stringstream ss(range);
            std::string a, b, c;
            if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
                throw ConfigError("--sweep: expected start:stop:count");
            }
            const double start = std::stod(a), stop = std::stod(b);
            const int count = std::stoi(c);
            if (count < 1) throw ConfigError("--sweep: count must be >= 1");
            for (int i = 0; i < count; ++i) {
                s.values.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
            }
        }
    } catch (const std::logic_error&) {
        throw ConfigError("--sweep: malformed range '" + range + "'");
    }
    if (s.values.empty()) throw ConfigError("--sweep: no values");
    return s;
}

ExperimentConfig apply_sweep_value(ExperimentConfig cfg, const std::string& parameter, double value) {
    if (parameter == "gamma") {
        for (double& r : cfg.noise.rates) r = value;
    } else if (parameter == "J") {
        cfg.chain.J = value;
    } else if (parameter == "omega") {
        cfg.chain.omega = value;
    } else if (parameter == "t_max") {
        cfg.integrator.t_max = value;
    } else {
        throw ConfigError("unknown sweep parameter '" + parameter + "'");
    }
    std::ostringstream dir;
    dir << parameter << '_' << std::setprecision(6) << value;
    cfg.output_dir = cfg.output_dir / dir.str();
    cfg.validate();
    return cfg;
}

}  // namespace xxsync
