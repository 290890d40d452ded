#include "xxsync/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace xxsync {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!ok.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T required(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T optional_or(const json& j, const std::string& where, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

cplx parse_complex(const json& j, const std::string& where) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw ConfigError(where + ": expected a number or [re, im]");
}

QubitSpec parse_qubit(const json& j, const std::string& where) {
    if (j.is_string()) return QubitSpec::named(j.get<std::string>());
    if (j.is_array() && j.size() == 2) {
        QubitSpec q;
        q.state = {parse_complex(j[0], where + "[0]"), parse_complex(j[1], where + "[1]")};
        return q;
    }
    throw ConfigError(where + ": expected a preset name or [amp0, amp1]");
}

json complex_to_json(cplx c) { return json::array({c.real(), c.imag()}); }

}  // namespace

QubitSpec QubitSpec::named(const std::string& name) {
    QubitSpec q;
    q.name = name;
    if (name == "zero") {
        q.state = QubitState::ground();
    } else if (name == "one") {
        q.state = QubitState::excited();
    } else if (name == "plus") {
        q.state = QubitState::plus();
    } else if (name == "minus") {
        q.state = QubitState::minus();
    } else {
        throw ConfigError("unknown qubit preset '" + name + "'");
    }
    return q;
}

bool QubitSpec::operator==(const QubitSpec& o) const {
    return name == o.name && state.zero == o.state.zero && state.one == o.state.one;
}

std::vector<QubitState> ExperimentConfig::qubits() const {
    std::vector<QubitState> out;
    for (const auto& q : initial_state) out.push_back(q.state);
    return out;
}

void ExperimentConfig::validate() const {
    try {
        chain.validate();
        noise.validate(chain.N);
        integrator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (static_cast<int>(initial_state.size()) != chain.N) {
        throw ConfigError("initial_state: expected " + std::to_string(chain.N) + " entries, got " +
                          std::to_string(initial_state.size()));
    }
    for (const auto& q : initial_state) {
        if (std::abs(std::norm(q.state.zero) + std::norm(q.state.one) - 1.0) > 1e-10) {
            throw ConfigError("initial_state: qubit amplitudes not normalized");
        }
    }
    if (analyses.pearson_window && !(*analyses.pearson_window > 0.0)) throw ConfigError("analyses.pearson_window must be positive");
    if (!(analyses.bright_threshold > 0.0)) throw ConfigError("analyses.bright_threshold must be positive");
    if (!(analyses.compare_window > 0.0)) throw ConfigError("analyses.compare_window must be positive");
}

ExperimentConfig parse_config(const json& j) {
    reject_unknown(j, "config", {"schema", "chain", "noise", "initial_state", "integrator", "analyses", "output_dir"});
    const auto schema = required<std::string>(j, "config", "schema");
    if (schema != kConfigSchema) throw ConfigError("config: unsupported schema '" + schema + "'");

    ExperimentConfig cfg;

    const json& c = j.contains("chain") ? j.at("chain") : throw ConfigError("config: missing key 'chain'");
    reject_unknown(c, "chain", {"N", "omega", "J"});
    cfg.chain = {required<int>(c, "chain", "N"), required<double>(c, "chain", "omega"), required<double>(c, "chain", "J")};

    const json& n = j.contains("noise") ? j.at("noise") : throw ConfigError("config: missing key 'noise'");
    reject_unknown(n, "noise", {"sites", "rates", "thermal_rates"});
    cfg.noise.sites = required<std::vector<int>>(n, "noise", "sites");
    cfg.noise.rates = required<std::vector<double>>(n, "noise", "rates");
    if (n.contains("thermal_rates")) cfg.noise.thermal_rates = required<std::vector<double>>(n, "noise", "thermal_rates");

    if (!j.contains("initial_state") || !j.at("initial_state").is_array()) {
        throw ConfigError("config: 'initial_state' must be an array");
    }
    for (std::size_t i = 0; i < j.at("initial_state").size(); ++i) {
        cfg.initial_state.push_back(parse_qubit(j.at("initial_state")[i], "initial_state[" + std::to_string(i) + "]"));
    }

    if (j.contains("integrator")) {
        const json& in = j.at("integrator");
        reject_unknown(in, "integrator",
                       {"dt", "t_max", "record_stride", "method", "rel_tol", "abs_tol", "snapshot_times",
                        "positivity_check_every"});
        auto& ic = cfg.integrator;
        ic.dt = optional_or(in, "integrator", "dt", ic.dt);
        ic.t_max = optional_or(in, "integrator", "t_max", ic.t_max);
        ic.record_stride = optional_or(in, "integrator", "record_stride", ic.record_stride);
        const auto method = optional_or<std::string>(in, "integrator", "method", "rk4");
        if (method == "rk4") {
            ic.method = Method::rk4;
        } else if (method == "adaptive_rk45") {
            ic.method = Method::adaptive_rk45;
        } else {
            throw ConfigError("integrator.method: expected rk4 or adaptive_rk45");
        }
        ic.rel_tol = optional_or(in, "integrator", "rel_tol", ic.rel_tol);
        ic.abs_tol = optional_or(in, "integrator", "abs_tol", ic.abs_tol);
        ic.snapshot_times = optional_or(in, "integrator", "snapshot_times", ic.snapshot_times);
        ic.positivity_check_every = optional_or(in, "integrator", "positivity_check_every", ic.positivity_check_every);
    }

    if (j.contains("analyses")) {
        const json& a = j.at("analyses");
        reject_unknown(a, "analyses",
                       {"pearson", "spectrum", "concurrence", "predict", "compare", "spectrum_t_start",
                        "pearson_window", "bright_threshold", "compare_window"});
        auto& an = cfg.analyses;
        an.pearson = optional_or(a, "analyses", "pearson", an.pearson);
        an.spectrum = optional_or(a, "analyses", "spectrum", an.spectrum);
        an.concurrence = optional_or(a, "analyses", "concurrence", an.concurrence);
        an.predict = optional_or(a, "analyses", "predict", an.predict);
        an.compare = optional_or(a, "analyses", "compare", an.compare);
        an.spectrum_t_start = optional_or(a, "analyses", "spectrum_t_start", an.spectrum_t_start);
        if (a.contains("pearson_window") && !a.at("pearson_window").is_null()) {
            an.pearson_window = required<double>(a, "analyses", "pearson_window");
        }
        an.bright_threshold = optional_or(a, "analyses", "bright_threshold", an.bright_threshold);
        an.compare_window = optional_or(a, "analyses", "compare_window", an.compare_window);
    }

    cfg.output_dir = optional_or<std::string>(j, "config", "output_dir", cfg.output_dir.string());
    cfg.validate();
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = kConfigSchema;
    j["chain"] = {{"N", cfg.chain.N}, {"omega", cfg.chain.omega}, {"J", cfg.chain.J}};
    j["noise"] = {{"sites", cfg.noise.sites}, {"rates", cfg.noise.rates}};
    if (cfg.noise.thermal_rates) j["noise"]["thermal_rates"] = *cfg.noise.thermal_rates;
    j["initial_state"] = json::array();
    for (const auto& q : cfg.initial_state) {
        if (q.name) {
            j["initial_state"].push_back(*q.name);
        } else {
            j["initial_state"].push_back(json::array({complex_to_json(q.state.zero), complex_to_json(q.state.one)}));
        }
    }
    const auto& ic = cfg.integrator;
    j["integrator"] = {{"dt", ic.dt},
                       {"t_max", ic.t_max},
                       {"record_stride", ic.record_stride},
                       {"method", ic.method == Method::rk4 ? "rk4" : "adaptive_rk45"},
                       {"rel_tol", ic.rel_tol},
                       {"abs_tol", ic.abs_tol},
                       {"snapshot_times", ic.snapshot_times},
                       {"positivity_check_every", ic.positivity_check_every}};
    const auto& an = cfg.analyses;
    j["analyses"] = {{"pearson", an.pearson},
                     {"spectrum", an.spectrum},
                     {"concurrence", an.concurrence},
                     {"predict", an.predict},
                     {"compare", an.compare},
                     {"spectrum_t_start", an.spectrum_t_start},
                     {"pearson_window", an.pearson_window ? json(*an.pearson_window) : json(nullptr)},
                     {"bright_threshold", an.bright_threshold},
                     {"compare_window", an.compare_window}};
    j["output_dir"] = cfg.output_dir.string();
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j);
}

std::filesystem::path preset_directory() {
    if (const char* env = std::getenv("XXSYNC_PRESETS")) return env;
    return XXSYNC_PRESET_DIR;
}

ExperimentConfig load_preset(const std::string& name) {
    const auto path = preset_directory() / (name + ".json");
    if (!std::filesystem::exists(path)) throw ConfigError("unknown preset '" + name + "' (looked for " + path.string() + ")");
    return load_config(path);
}

}  // namespace xxsync
