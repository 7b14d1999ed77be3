#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdstab/control.hpp"
#include "rdstab/error.hpp"
#include "rdstab/model.hpp"
#include "rdstab/params.hpp"
#include "rdstab/sim.hpp"

namespace rdstab {

struct DelayConfig {
    double mean = 2.0;
    double amplitude = 1.5;
    double omega = 1.0;
    double phase = 0.0;

    [[nodiscard]] double operator()(double t) const { return mean + amplitude * std::sin(omega * t + phase); }
};

struct DisturbanceConfig {
    bool enabled = true;
    PulsedAmplitude amplitude;
};

/// Random delay draws h(t) = mean + A sin(omega t + psi) for robustness sweeps.
struct SweepConfig {
    int runs = 20;
    int holdout = 10;
    std::uint64_t seed = 1;
    double amplitude_max = 1.5;
    double omega_min = 0.5;
    double omega_max = 2.0;
};

struct OutputConfig {
    std::string dir = "out";
    int stride = 10;          ///< trajectory CSV row every n-th step
    int field_stride = 100;   ///< field CSV / heatmap time sample every n-th step
    int field_points = 51;
};

struct RunConfig {
    PlantParams plant;
    std::optional<int> N0;
    std::optional<std::vector<Pole>> poles;
    Actuation actuation = Actuation::Both;
    std::optional<double> kappa;
    int modes = 30;
    double dt = 1e-3;
    double horizon = 40.0;
    double history_scale = 1.0;
    DelayConfig delay;
    DisturbanceConfig disturbance;
    SweepConfig sweep;
    OutputConfig output;

    void validate() const {
        plant.validate();
        if (N0 && *N0 < 1) throw Error(ErrorCode::ConfigError, "design.N0: must be >= 1");
        if (poles && N0 && static_cast<int>(poles->size()) != *N0) {
            throw Error(ErrorCode::ConfigError, "design.poles: count must equal design.N0");
        }
        if (kappa && !(*kappa > 0.0)) throw Error(ErrorCode::ConfigError, "design.kappa: must be > 0");
        if (modes < 1) throw Error(ErrorCode::ConfigError, "simulation.modes: must be >= 1");
        if (!(dt > 0.0)) throw Error(ErrorCode::ConfigError, "simulation.dt: must be > 0");
        if (!(horizon >= dt)) throw Error(ErrorCode::ConfigError, "simulation.horizon: must be >= dt");
        if (sweep.runs < 1 || sweep.holdout < 0) throw Error(ErrorCode::ConfigError, "sweep: need runs >= 1, holdout >= 0");
        if (sweep.amplitude_max < 0.0 || sweep.omega_min < 0.0 || sweep.omega_max < sweep.omega_min) {
            throw Error(ErrorCode::ConfigError, "sweep: need 0 <= amplitude_max and 0 <= omega_min <= omega_max");
        }
        if (output.stride < 1 || output.field_stride < 1 || output.field_points < 2) {
            throw Error(ErrorCode::ConfigError, "output: strides must be >= 1 and field_points >= 2");
        }
    }
};

namespace detail {

using cjson = nlohmann::json;

inline void reject_unknown(const cjson& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw Error(ErrorCode::ConfigError, (path.empty() ? "<root>" : path) + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) {
            throw Error(ErrorCode::ConfigError, (path.empty() ? "" : path + ".") + it.key() + ": unknown key");
        }
    }
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline void read(const cjson& obj, const std::string& path, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw Error(ErrorCode::ConfigError, join(path, key) + ": expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw Error(ErrorCode::ConfigError, join(path, key) + ": must be finite");
}

inline void read(const cjson& obj, const std::string& path, const char* key, int& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw Error(ErrorCode::ConfigError, join(path, key) + ": expected an integer");
    out = v.get<int>();
}

inline void read(const cjson& obj, const std::string& path, const char* key, std::uint64_t& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) {
        throw Error(ErrorCode::ConfigError, join(path, key) + ": expected a non-negative integer");
    }
    out = v.get<std::uint64_t>();
}

inline void read(const cjson& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw Error(ErrorCode::ConfigError, join(path, key) + ": expected true or false");
    out = v.get<bool>();
}

inline void read(const cjson& obj, const std::string& path, const char* key, std::string& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw Error(ErrorCode::ConfigError, join(path, key) + ": expected a string");
    out = v.get<std::string>();
}

inline const cjson* section(const cjson& obj, const char* key) { return obj.contains(key) ? &obj.at(key) : nullptr; }

inline Pole read_pole(const cjson& v, const std::string& path) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw Error(ErrorCode::ConfigError, path + ": expected a number or [re, im]");
}

}  // namespace detail

/// Strict JSON config. Every section and key is optional; unknown keys,
/// wrong types and syntax errors throw ConfigError naming the line or field.
inline RunConfig parse_config(const std::string& text) {
    using detail::read;
    detail::cjson root;
    try {
        root = detail::cjson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.what() carries "at line L, column C"
        throw Error(ErrorCode::ConfigError, std::string("config syntax error: ") + e.what());
    }
    RunConfig cfg;
    detail::reject_unknown(root, "", {"plant", "design", "simulation", "sweep", "output"});

    if (const auto* s = detail::section(root, "plant")) {
        detail::reject_unknown(*s, "plant", {"a", "b", "c", "theta1", "theta2", "h_min", "h_max"});
        read(*s, "plant", "a", cfg.plant.a);
        read(*s, "plant", "b", cfg.plant.b);
        read(*s, "plant", "c", cfg.plant.c);
        read(*s, "plant", "theta1", cfg.plant.theta1);
        read(*s, "plant", "theta2", cfg.plant.theta2);
        read(*s, "plant", "h_min", cfg.plant.h_min);
        read(*s, "plant", "h_max", cfg.plant.h_max);
    }
    if (const auto* s = detail::section(root, "design")) {
        detail::reject_unknown(*s, "design", {"N0", "poles", "actuation", "kappa"});
        if (s->contains("N0")) {
            int n = 0;
            read(*s, "design", "N0", n);
            cfg.N0 = n;
        }
        if (s->contains("poles")) {
            const auto& arr = s->at("poles");
            if (!arr.is_array() || arr.empty()) throw Error(ErrorCode::ConfigError, "design.poles: expected a non-empty array");
            std::vector<Pole> mu;
            for (std::size_t i = 0; i < arr.size(); ++i) {
                mu.push_back(detail::read_pole(arr[i], "design.poles[" + std::to_string(i) + "]"));
            }
            cfg.poles = std::move(mu);
        }
        if (s->contains("actuation")) {
            std::string a;
            read(*s, "design", "actuation", a);
            try {
                cfg.actuation = parse_actuation(a);
            } catch (const Error& e) {
                throw Error(ErrorCode::ConfigError, "design.actuation: " + e.message());
            }
        }
        if (s->contains("kappa")) {
            double k = 0.0;
            read(*s, "design", "kappa", k);
            cfg.kappa = k;
        }
    }
    if (const auto* s = detail::section(root, "simulation")) {
        detail::reject_unknown(*s, "simulation", {"modes", "dt", "horizon", "history_scale", "delay", "disturbance"});
        read(*s, "simulation", "modes", cfg.modes);
        read(*s, "simulation", "dt", cfg.dt);
        read(*s, "simulation", "horizon", cfg.horizon);
        read(*s, "simulation", "history_scale", cfg.history_scale);
        if (const auto* d = detail::section(*s, "delay")) {
            const std::string path = "simulation.delay";
            detail::reject_unknown(*d, path, {"mean", "amplitude", "omega", "phase"});
            read(*d, path, "mean", cfg.delay.mean);
            read(*d, path, "amplitude", cfg.delay.amplitude);
            read(*d, path, "omega", cfg.delay.omega);
            read(*d, path, "phase", cfg.delay.phase);
        }
        if (const auto* d = detail::section(*s, "disturbance")) {
            const std::string path = "simulation.disturbance";
            detail::reject_unknown(*d, path,
                                   {"enabled", "pulse_start", "pulse_center", "pulse_amplitude", "pulse_width",
                                    "persistent_start", "persistent_offset", "persistent_amplitude",
                                    "persistent_frequency"});
            auto& amp = cfg.disturbance.amplitude;
            read(*d, path, "enabled", cfg.disturbance.enabled);
            read(*d, path, "pulse_start", amp.pulse_start);
            read(*d, path, "pulse_center", amp.pulse_center);
            read(*d, path, "pulse_amplitude", amp.pulse_amplitude);
            read(*d, path, "pulse_width", amp.pulse_width);
            read(*d, path, "persistent_start", amp.persistent_start);
            read(*d, path, "persistent_offset", amp.persistent_offset);
            read(*d, path, "persistent_amplitude", amp.persistent_amplitude);
            read(*d, path, "persistent_frequency", amp.persistent_frequency);
            if (!(amp.pulse_width > 0.0)) throw Error(ErrorCode::ConfigError, path + ".pulse_width: must be > 0");
        }
    }
    if (const auto* s = detail::section(root, "sweep")) {
        detail::reject_unknown(*s, "sweep", {"runs", "holdout", "seed", "amplitude_max", "omega_min", "omega_max"});
        read(*s, "sweep", "runs", cfg.sweep.runs);
        read(*s, "sweep", "holdout", cfg.sweep.holdout);
        read(*s, "sweep", "seed", cfg.sweep.seed);
        read(*s, "sweep", "amplitude_max", cfg.sweep.amplitude_max);
        read(*s, "sweep", "omega_min", cfg.sweep.omega_min);
        read(*s, "sweep", "omega_max", cfg.sweep.omega_max);
    }
    if (const auto* s = detail::section(root, "output")) {
        detail::reject_unknown(*s, "output", {"dir", "stride", "field_stride", "field_points"});
        read(*s, "output", "dir", cfg.output.dir);
        read(*s, "output", "stride", cfg.output.stride);
        read(*s, "output", "field_stride", cfg.output.field_stride);
        read(*s, "output", "field_points", cfg.output.field_points);
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.message());
    }
}

/// Model and certified design from the config: --kappa drives the decay-rate
/// design; otherwise N0 and poles come from the config or the defaults
/// (threshold mode count, poles -3|c| - 0.5, spaced by 0.5).
inline DecayRateDesign design_from_config(const RunConfig& cfg) {
    const Spectrum spectrum = compute_spectrum(cfg.plant, std::max(cfg.modes, 8));
    if (cfg.kappa) {
        PolePolicy policy;
        policy.actuation = cfg.actuation;
        return design_for_decay_rate(spectrum, *cfg.kappa, policy);
    }
    const int N0 = cfg.N0 ? *cfg.N0 : select_mode_count(spectrum, cfg.plant.c);
    DecayRateDesign out;
    out.model = build_model(spectrum, N0, cfg.actuation);
    std::vector<Pole> mu = cfg.poles ? *cfg.poles : evenly_spaced_poles(N0, 3.0 * std::abs(cfg.plant.c) + 0.5, 0.5);
    if (static_cast<int>(mu.size()) != N0) throw Error(ErrorCode::ConfigError, "design.poles: count must equal N0");
    out.design = design_controller(out.model, mu, cfg.actuation);
    return out;
}

inline Scenario scenario_from_config(const RunConfig& cfg, const ControllerDesign& design, const DelayConfig& delay) {
    Scenario sc;
    sc.params = cfg.plant;
    sc.modes = cfg.modes;
    sc.design = design;
    sc.horizon = cfg.horizon;
    sc.dt = cfg.dt;
    sc.delay = delay;
    const double scale = cfg.history_scale;
    sc.history = [scale](double tau, double x) { return scale * reference_history(tau, x); };
    if (cfg.disturbance.enabled) {
        sc.disturbance = Disturbance::separable(cfg.disturbance.amplitude, [](double x) { return 1.0 - x; });
    }
    return sc;
}

inline Scenario scenario_from_config(const RunConfig& cfg, const ControllerDesign& design) {
    return scenario_from_config(cfg, design, cfg.delay);
}

}  // namespace rdstab
