#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "rdstab/config.hpp"
#include "rdstab/iss.hpp"
#include "rdstab/sim.hpp"

namespace rdstab {

namespace detail {
// 53 random bits -> [0, 1); avoids the implementation-defined std distributions
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace detail

/// `count` delays mean + A sin(omega t + psi) with A, omega, psi uniform.
inline std::vector<DelayConfig> draw_delays(const SweepConfig& sweep, double mean, std::size_t count,
                                            std::mt19937_64& rng) {
    std::vector<DelayConfig> out(count);
    for (auto& d : out) {
        d.mean = mean;
        d.amplitude = sweep.amplitude_max * detail::unit_uniform(rng);
        d.omega = sweep.omega_min + (sweep.omega_max - sweep.omega_min) * detail::unit_uniform(rng);
        d.phase = 2.0 * std::numbers::pi * detail::unit_uniform(rng);
    }
    return out;
}

/// Simulates one scenario per delay, in parallel; results keep input order.
inline std::vector<Trajectory> simulate_batch(const RunConfig& cfg, const ControllerDesign& design,
                                              const std::vector<DelayConfig>& delays) {
    std::vector<Trajectory> out(delays.size());
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < delays.size(); start += workers) {
        std::vector<std::future<Trajectory>> jobs;
        const std::size_t stop = std::min(delays.size(), start + workers);
        for (std::size_t i = start; i < stop; ++i) {
            jobs.push_back(std::async(std::launch::async, [&, i] {
                return simulate(scenario_from_config(cfg, design, delays[i]));
            }));
        }
        for (std::size_t i = start; i < stop; ++i) out[i] = jobs[i - start].get();
    }
    return out;
}

struct IssSweepReport {
    IssFit fit;
    std::vector<DelayConfig> batch_delays;
    std::vector<DelayConfig> holdout_delays;
    std::size_t batch_violations = 0;
    std::size_t holdout_violations = 0;
    double holdout_residual = 0.0;  ///< max ||y|| - bound over the holdout runs
    double holdout_worst_time = 0.0;
    std::size_t holdout_worst_run = 0;
    bool input_bound = true;        ///< ||u|| <= ||K|| ||Y|| on every run
    double min_recovery_rate = 0.0; ///< smallest decay rate fitted on the recovery window
};

/// Fits (C0, C1) on `sweep.runs` random-delay runs at the given kappa, then
/// checks the same constants on `sweep.holdout` fresh draws. The recovery
/// rate is fit_decay over [recovery_t1, recovery_t2] on every run.
inline IssSweepReport iss_sweep(const RunConfig& cfg, const ControllerDesign& design, double kappa,
                                double recovery_t1 = 12.0, double recovery_t2 = 20.0) {
    std::mt19937_64 rng(cfg.sweep.seed);
    IssSweepReport rep;
    rep.batch_delays = draw_delays(cfg.sweep, cfg.delay.mean, static_cast<std::size_t>(cfg.sweep.runs), rng);
    rep.holdout_delays = draw_delays(cfg.sweep, cfg.delay.mean, static_cast<std::size_t>(cfg.sweep.holdout), rng);

    const std::vector<Trajectory> batch = simulate_batch(cfg, design, rep.batch_delays);
    rep.fit = verify_iss(batch, kappa);
    rep.batch_violations = iss_violations(batch, rep.fit);

    const std::vector<Trajectory> holdout = simulate_batch(cfg, design, rep.holdout_delays);
    rep.holdout_violations = holdout.empty() ? 0 : iss_violations(holdout, rep.fit);
    rep.holdout_residual = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < holdout.size(); ++r) {
        const Trajectory& traj = holdout[r];
        const IssEnvelope env = iss_envelope(traj, kappa);
        for (std::size_t i = 0; i < traj.steps(); ++i) {
            const double excess =
                traj.state_norm[i] - (rep.fit.C0_fit * env.e0[i] + rep.fit.C1_fit * env.e1[i]);
            if (excess > rep.holdout_residual) {
                rep.holdout_residual = excess;
                rep.holdout_worst_time = traj.times[i];
                rep.holdout_worst_run = r;
            }
        }
    }

    rep.min_recovery_rate = std::numeric_limits<double>::infinity();
    const bool window_fits = cfg.horizon >= recovery_t2;
    for (const auto* set : {&batch, &holdout}) {
        for (const auto& traj : *set) {
            rep.input_bound = rep.input_bound && input_bound_holds(traj);
            if (window_fits) rep.min_recovery_rate = std::min(rep.min_recovery_rate, fit_decay(traj, recovery_t1, recovery_t2).kappa);
        }
    }
    if (!window_fits) rep.min_recovery_rate = NAN;
    return rep;
}

}  // namespace rdstab
