#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rdstab/config.hpp"
#include "rdstab/error.hpp"
#include "rdstab/io.hpp"
#include "rdstab/sim.hpp"
#include "rdstab/svg.hpp"
#include "rdstab/sweep.hpp"

namespace rdstab {

namespace cli {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> modes;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::string actuation;
    std::optional<double> kappa;
};

inline void add_flags(CLI::App& cmd, Flags& f) {
    cmd.add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd.add_option("--out", f.out, "output directory");
    cmd.add_option("--seed", f.seed, "seed for random delay draws");
    cmd.add_option("--modes", f.modes, "number of modes (spectrum size / simulated modes)");
    cmd.add_option("--dt", f.dt, "time step (s)");
    cmd.add_option("--horizon", f.horizon, "simulation horizon (s)");
    cmd.add_option("--actuation", f.actuation, "both|left|right")->check(CLI::IsMember({"both", "left", "right"}));
    cmd.add_option("--kappa", f.kappa, "target decay rate (1/s) for the decay-rate design");
}

/// Config file (or defaults) with command-line overrides applied.
inline RunConfig resolve(const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (!f.out.empty()) cfg.output.dir = f.out;
    if (f.seed) cfg.sweep.seed = *f.seed;
    if (f.modes) cfg.modes = *f.modes;
    if (f.dt) cfg.dt = *f.dt;
    if (f.horizon) cfg.horizon = *f.horizon;
    if (!f.actuation.empty()) cfg.actuation = parse_actuation(f.actuation);
    if (f.kappa) cfg.kappa = *f.kappa;
    cfg.validate();
    return cfg;
}

inline std::filesystem::path ensure_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
    os << text;
}

template <class Writer>
void write_with(const std::filesystem::path& path, Writer&& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
    w(os);
}

inline std::vector<double> unit_grid(int points) {
    std::vector<double> xs(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) xs[static_cast<std::size_t>(j)] = static_cast<double>(j) / (points - 1);
    return xs;
}

inline svg::Series norm_series(const Trajectory& traj, std::size_t stride, std::string label, std::string color) {
    svg::Series s{std::move(label), {}, {}, std::move(color)};
    for (std::size_t k = 0; k < traj.steps(); k += stride) {
        s.x.push_back(traj.times[k]);
        s.y.push_back(traj.state_norm[k]);
    }
    return s;
}

inline svg::Series input_series(const Trajectory& traj, std::size_t stride, int which, std::string label,
                                std::string color) {
    svg::Series s{std::move(label), {}, {}, std::move(color)};
    for (std::size_t k = 0; k < traj.steps(); k += stride) {
        s.x.push_back(traj.times[k]);
        s.y.push_back(traj.inputs[k][static_cast<std::size_t>(which)]);
    }
    return s;
}

/// Writes trajectory/field CSVs and the field heatmap for one run; returns summary numbers.
inline json emit_run(const RunConfig& cfg, const Trajectory& traj, const Spectrum& spectrum,
                     const std::filesystem::path& dir, const std::string& tag) {
    const auto stride = static_cast<std::size_t>(cfg.output.stride);
    write_with(dir / ("trajectory" + tag + ".csv"), [&](std::ostream& os) { write_trajectory_csv(os, traj, stride); });
    const std::vector<double> xs = unit_grid(cfg.output.field_points);
    const FieldSamples field = reconstruct(traj, spectrum, xs, static_cast<std::size_t>(cfg.output.field_stride));
    write_with(dir / ("field" + tag + ".csv"), [&](std::ostream& os) { write_field_csv(os, field); });
    write_text(dir / ("field" + tag + ".svg"), svg::heatmap(field, "y(t, x)" + tag));

    json j;
    double peak = 0.0;
    for (double v : traj.state_norm) peak = std::max(peak, v);
    j["history_sup_norm"] = traj.history_sup_norm;
    j["peak_norm"] = peak;
    j["final_norm"] = traj.state_norm.back();
    if (cfg.horizon >= 8.0) j["norm_at_8"] = traj.state_norm[traj.index_at(8.0)];
    return j;
}

inline int cmd_spectrum(const RunConfig& cfg, bool write_files, std::ostream& out) {
    const Spectrum s = compute_spectrum(cfg.plant, cfg.modes);
    const json j = to_json(s);
    out << j.dump(2) << '\n';
    if (write_files) write_text(ensure_dir(cfg.output.dir) / "spectrum.json", j.dump(2) + "\n");
    return kOk;
}

inline int cmd_design(const RunConfig& cfg, bool write_files, std::ostream& out) {
    const DecayRateDesign d = design_from_config(cfg);
    const json j{{"model", to_json(d.model)}, {"certificate", to_json(d.design)}};
    out << j.dump(2) << '\n';
    if (write_files) write_text(ensure_dir(cfg.output.dir) / "design.json", j.dump(2) + "\n");
    return kOk;
}

inline int cmd_simulate(RunConfig cfg, std::ostream& out) {
    const DecayRateDesign d = design_from_config(cfg);
    cfg.modes = std::max(cfg.modes, d.design.N0);
    const Scenario sc = scenario_from_config(cfg, d.design);
    const Trajectory traj = simulate(sc);
    const Spectrum spectrum = compute_spectrum(cfg.plant, cfg.modes);
    const auto dir = ensure_dir(cfg.output.dir);
    json summary = emit_run(cfg, traj, spectrum, dir, "");
    const auto stride = static_cast<std::size_t>(cfg.output.stride);
    write_text(dir / "norm.svg", svg::line_plot({norm_series(traj, stride, "||y||", "#1f77b4")}, "state norm",
                                                "t (s)", "||y(t)||", true));
    write_text(dir / "inputs.svg", svg::line_plot({input_series(traj, stride, 0, "u1", "#d62728"),
                                                   input_series(traj, stride, 1, "u2", "#2ca02c")},
                                                  "boundary inputs", "t (s)", "u(t)"));
    summary["certificate"] = to_json(d.design);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
    return kOk;
}

inline int cmd_verify_iss(const RunConfig& cfg, std::ostream& out) {
    const DecayRateDesign d = design_from_config(cfg);
    RunConfig run = cfg;
    run.modes = std::max(run.modes, d.design.N0);
    const IssSweepReport rep = iss_sweep(run, d.design, d.design.kappa);
    json delays = json::array();
    for (const auto& dl : rep.batch_delays) {
        delays.push_back({{"amplitude", dl.amplitude}, {"omega", dl.omega}, {"phase", dl.phase}});
    }
    json j{{"fit", to_json(rep.fit)},
           {"certificate", to_json(d.design)},
           {"batch_runs", rep.batch_delays.size()},
           {"holdout_runs", rep.holdout_delays.size()},
           {"batch_violations", rep.batch_violations},
           {"holdout_violations", rep.holdout_violations},
           {"holdout_residual", rep.holdout_residual},
           {"holdout_worst_time", rep.holdout_worst_time},
           {"holdout_worst_run", rep.holdout_worst_run},
           {"input_bound_holds", rep.input_bound},
           {"min_recovery_rate", rep.min_recovery_rate},
           {"batch_delays", std::move(delays)}};
    write_text(ensure_dir(cfg.output.dir) / "iss_fit.json", j.dump(2) + "\n");
    out << j.dump(2) << '\n';
    return kOk;
}

inline int cmd_reproduce(const RunConfig& cfg, std::ostream& out) {
    const auto dir = ensure_dir(cfg.output.dir);
    const Spectrum spectrum = compute_spectrum(cfg.plant, std::max(cfg.modes, 8));
    write_text(dir / "spectrum.json", to_json(spectrum).dump(2) + "\n");

    out << "eigenvalues\n";
    char line[128];
    for (std::size_t n = 0; n < 5; ++n) {
        std::snprintf(line, sizeof line, "  lambda_%zu = %.6f\n", n + 1, spectrum[n].lambda);
        out << line;
    }
    const int N0 = select_mode_count(spectrum, cfg.plant.c);
    out << "N0 = " << N0 << '\n';

    const std::vector<Pole> mu = cfg.poles ? *cfg.poles : std::vector<Pole>{Pole(-3.5, 0.0), Pole(-4.0, 0.0)};
    const TruncatedModel model_both = build_model(spectrum, N0, Actuation::Both);
    const TruncatedModel model_left = build_model(spectrum, N0, Actuation::LeftOnly);
    const ControllerDesign both = design_controller(model_both, mu, Actuation::Both);
    const ControllerDesign left = design_controller(model_left, mu, Actuation::LeftOnly);
    write_text(dir / "design_both.json",
               json{{"model", to_json(model_both)}, {"certificate", to_json(both)}}.dump(2) + "\n");
    write_text(dir / "design_left.json",
               json{{"model", to_json(model_left)}, {"certificate", to_json(left)}}.dump(2) + "\n");
    snprintf(line, sizeof line, "certificate: alpha = %.4f beta = %.5f sigma = %.6f kappa = %.6f\n", both.alpha,
             both.beta, both.sigma, both.kappa);
    out << line;

    RunConfig run = cfg;
    run.modes = std::max(run.modes, N0);
    const Trajectory t_both = simulate(scenario_from_config(run, both));
    const Trajectory t_left = simulate(scenario_from_config(run, left));
    json summary;
    summary["eigenvalues"] = json::array({spectrum[0].lambda, spectrum[1].lambda, spectrum[2].lambda});
    summary["N0"] = N0;
    summary["two_input"] = emit_run(run, t_both, spectrum, dir, "_both");
    summary["single_input"] = emit_run(run, t_left, spectrum, dir, "_left");
    summary["certificate"] = to_json(both);

    const auto stride = static_cast<std::size_t>(cfg.output.stride);
    write_text(dir / "norm.svg", svg::line_plot({norm_series(t_both, stride, "two inputs", "#1f77b4"),
                                                 norm_series(t_left, stride, "u2 = 0", "#ff7f0e")},
                                                "state norm", "t (s)", "||y(t)||", true));
    write_text(dir / "inputs.svg", svg::line_plot({input_series(t_both, stride, 0, "u1 (two inputs)", "#d62728"),
                                                   input_series(t_both, stride, 1, "u2 (two inputs)", "#2ca02c"),
                                                   input_series(t_left, stride, 0, "u1 (u2 = 0)", "#9467bd")},
                                                  "boundary inputs", "t (s)", "u(t)"));
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    out << "outputs written to " << dir.string() << '\n';
    return kOk;
}

}  // namespace cli

/// Entry point of the command-line tool. Exit codes: 0 success,
/// 1 validation error, 2 numerical failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Delayed reaction-diffusion boundary stabilization toolkit", "rdstab"};
    app.require_subcommand(1);
    cli::Flags f;
    CLI::App* spectrum = app.add_subcommand("spectrum", "emit eigenpairs as JSON");
    CLI::App* design = app.add_subcommand("design", "emit truncated model, gain and certificates");
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one scenario, write CSV and SVG output");
    CLI::App* verify = app.add_subcommand("verify-iss", "random-delay sweep and fading-memory bound fit");
    CLI::App* reproduce = app.add_subcommand("reproduce-paper", "reference pipeline: spectrum, designs, both runs");
    for (CLI::App* cmd : {spectrum, design, simulate_cmd, verify, reproduce}) cli::add_flags(*cmd, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return cli::kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return cli::kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return cli::kValidation;
    }

    try {
        const RunConfig cfg = cli::resolve(f);
        if (spectrum->parsed()) return cli::cmd_spectrum(cfg, !f.out.empty(), out);
        if (design->parsed()) return cli::cmd_design(cfg, !f.out.empty(), out);
        if (simulate_cmd->parsed()) return cli::cmd_simulate(cfg, out);
        if (verify->parsed()) return cli::cmd_verify_iss(cfg, out);
        if (reproduce->parsed()) return cli::cmd_reproduce(cfg, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_validation_error(e.code()) ? cli::kValidation : cli::kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return cli::kNumerical;
    }
    return cli::kValidation;
}

}  // namespace rdstab
