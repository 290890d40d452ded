// config.hpp: experiment configuration files.
//
// JSON with a versioned "schema" key. Unknown keys are rejected at every level
// so that typos fail before any computation starts.

#pragma once

#include "xxsync/dfs.hpp"
#include "xxsync/dynamics.hpp"
#include "xxsync/hilbert.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace xxsync {

inline constexpr const char* kConfigSchema = "xxsync.experiment/1";

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A qubit given either by preset name (zero | one | plus | minus) or by its
// two complex amplitudes.
struct QubitSpec {
    std::optional<std::string> name;
    QubitState state;

    static QubitSpec named(const std::string& name);
    bool operator==(const QubitSpec& o) const;
};

struct Analyses {
    bool pearson{true};
    bool spectrum{true};
    bool concurrence{true};
    bool predict{false};
    bool compare{false};
    double spectrum_t_start{600.0};
    // Sliding window for the Pearson coefficient; defaults to two periods of
    // the slowest dark-mode frequency.
    std::optional<double> pearson_window;
    double bright_threshold{1e-9};
    double compare_window{500.0};

    bool operator==(const Analyses&) const = default;
};

struct ExperimentConfig {
    ChainSpec chain;
    NoiseSpec noise;
    std::vector<QubitSpec> initial_state;
    IntegratorConfig integrator;
    Analyses analyses;
    std::filesystem::path output_dir{"out"};

    std::vector<QubitState> qubits() const;
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path);

// Directory holding the shipped presets; $XXSYNC_PRESETS overrides it.
std::filesystem::path preset_directory();
ExperimentConfig load_preset(const std::string& name);

}  // namespace xxsync
