// commands.hpp: the work behind each CLI subcommand.
//
// Every command takes a validated ExperimentConfig, returns its results in
// memory and, when write_files is set, writes them under config.output_dir.

#pragma once

#include "xxsync/config.hpp"
#include "xxsync/dfs.hpp"
#include "xxsync/dynamics.hpp"
#include "xxsync/observables.hpp"
#include "xxsync/predictor.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace xxsync {

struct DfsCommandResult {
    DfsReport report;
    DarknessReport darkness;
    std::vector<double> dark_energies;  // single-excitation dark energies, label order
    nlohmann::json json;
};

DfsCommandResult cmd_dfs(const ExperimentConfig& cfg, bool write_files = true);

struct SimulationResult {
    DfsReport report;
    Trajectory trajectory;
    std::optional<PearsonSeries> pearson;
    std::optional<SpectrumPeaks> spectrum;
    std::vector<double> concurrence;  // one per recorded time, when requested
    std::vector<double> bright_population;
    std::optional<Snapshot> cutoff;  // state at T*, if reached
    double pearson_window{0.0};
    nlohmann::json summary;
};

SimulationResult cmd_simulate(const ExperimentConfig& cfg, bool write_files = true);

struct PredictionResult {
    DfsReport report;
    TransitionTable table;
    AsymptoticState state;
    SyncVerdict verdict;
    std::vector<double> times;
    std::vector<std::vector<double>> series;  // per site 1..N
    std::optional<double> asymptotic_concurrence;
    nlohmann::json json;
};

// Uses the analytic rho_inf when the initial state allows it and falls back to
// a simulation up to T* otherwise.
PredictionResult cmd_predict(const ExperimentConfig& cfg, bool write_files = true);

struct CompareResult {
    double t_star{-1.0};
    double window_end{0.0};
    std::vector<int> sites;
    std::vector<double> max_residual;  // per site
    double worst{0.0};
    bool reached_cutoff{false};
    nlohmann::json json;
};

// Simulation against the closed form started at T*, over [T*, T* + window].
CompareResult cmd_compare(const ExperimentConfig& cfg, bool write_files = true);

struct OracleResult {
    PeripheralSpectrum spectrum;
    DfsReport report;
    std::size_t expected_count{0};
    double max_frequency_mismatch{0.0};
    nlohmann::json json;
};

OracleResult cmd_oracle(const ExperimentConfig& cfg, bool write_files = true);

// Two periods of the slowest single-excitation dark frequency, or 100 time
// units when the DFS has no oscillating mode.
double default_pearson_window(const DfsReport& report, const ChainSpec& chain);

// Angular frequencies E_nu - E_mu over all pairs of dark states (both signs).
std::vector<double> dfs_energy_differences(const DfsReport& report, const ChainSpec& chain);

struct SweepSpec {
    std::string parameter;  // gamma | J | omega | t_max
    std::vector<double> values;
};

// "param:start:stop:count" (inclusive, linear) or "param:v1,v2,...".
SweepSpec parse_sweep(const std::string& text);
ExperimentConfig apply_sweep_value(ExperimentConfig cfg, const std::string& parameter, double value);

}  // namespace xxsync
