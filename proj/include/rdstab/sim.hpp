#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdstab/control.hpp"
#include "rdstab/dde.hpp"
#include "rdstab/error.hpp"
#include "rdstab/model.hpp"
#include "rdstab/spectral.hpp"

namespace rdstab {

using HistoryFn = std::function<double(double tau, double x)>;

/// Distributed disturbance d(t, x). Either zero, separable d0(t) g(x)
/// (projections cached once), or a general field.
class Disturbance {
public:
    Disturbance() = default;

    static Disturbance separable(std::function<double(double)> amplitude, std::function<double(double)> shape) {
        Disturbance d;
        d.amplitude_ = std::move(amplitude);
        d.shape_ = std::move(shape);
        return d;
    }

    static Disturbance field(std::function<double(double, double)> f) {
        Disturbance d;
        d.field_ = std::move(f);
        return d;
    }

    [[nodiscard]] bool is_zero() const { return !field_ && !(amplitude_ && shape_); }
    [[nodiscard]] bool is_separable() const { return !field_ && amplitude_ && shape_; }
    [[nodiscard]] double amplitude(double t) const { return amplitude_(t); }
    [[nodiscard]] double shape(double x) const { return shape_(x); }

    [[nodiscard]] double operator()(double t, double x) const {
        if (field_) return field_(t, x);
        if (amplitude_ && shape_) return amplitude_(t) * shape_(x);
        return 0.0;
    }

private:
    std::function<double(double)> amplitude_;
    std::function<double(double)> shape_;
    std::function<double(double, double)> field_;
};

/// Default disturbance amplitude for the reference scenario: zero before
/// pulse_start, a Gaussian pulse peaking at pulse_center until
/// persistent_start, then a persistent offset plus oscillation.
struct PulsedAmplitude {
    double pulse_start = 8.0;
    double pulse_center = 10.0;
    double pulse_amplitude = 5.0;
    double pulse_width = 0.5;  ///< divisor of (t - center)^2 in the exponent
    double persistent_start = 20.0;
    double persistent_offset = 1.0;
    double persistent_amplitude = 0.5;
    double persistent_frequency = 3.0;

    [[nodiscard]] double operator()(double t) const {
        if (t < pulse_start) return 0.0;
        if (t < persistent_start) {
            const double s = t - pulse_center;
            return pulse_amplitude * std::exp(-s * s / pulse_width);
        }
        return persistent_offset + persistent_amplitude * std::sin(persistent_frequency * t);
    }
};

struct Scenario {
    PlantParams params;
    int modes = 30;
    ControllerDesign design;
    double horizon = 40.0;
    double dt = 1e-3;
    std::function<double(double)> delay;
    HistoryFn history;
    Disturbance disturbance;

    /// Throws InvalidScenario / DelayOutOfBounds / parameter errors.
    void validate() const {
        params.validate();
        if (design.N0 < 1 || design.K.rows() != 2 || design.K.cols() != design.N0) {
            throw Error(ErrorCode::InvalidScenario, "controller gain must be 2 x N0 with N0 >= 1");
        }
        if (modes < design.N0) throw Error(ErrorCode::InvalidScenario, "simulated modes must be >= N0");
        if (!(dt > 0.0) || !(horizon >= dt)) throw Error(ErrorCode::InvalidScenario, "need dt > 0 and horizon >= dt");
        if (dt > params.h_min) throw Error(ErrorCode::InvalidScenario, "dt must not exceed the minimal delay");
        if (!delay) throw Error(ErrorCode::InvalidScenario, "no delay function");
        if (!history) throw Error(ErrorCode::InvalidScenario, "no history function");
        constexpr int samples = 10000;
        for (int i = 0; i <= samples; ++i) {
            const double t = horizon * static_cast<double>(i) / samples;
            const double h = delay(t);
            if (!(h >= params.h_min && h <= params.h_max)) {
                throw Error(ErrorCode::DelayOutOfBounds,
                            "h(" + std::to_string(t) + ") = " + std::to_string(h) + " outside [h_min, h_max]");
            }
        }
    }
};

/// Closed-loop modal trajectory on the uniform grid 0, dt, ..., T.
struct Trajectory {
    int modes = 0;
    int N0 = 0;
    std::vector<double> times;
    std::vector<double> states;  ///< row-major [step][mode]
    std::vector<std::array<double, 2>> inputs;
    std::vector<double> state_norm;
    std::vector<double> delay_trace;
    std::vector<double> disturbance_norm;  ///< ||d(t, .)||
    double history_sup_norm = 0.0;         ///< sup over [-h_max, 0] of ||phi(tau, .)||
    Eigen::MatrixXd K;

    [[nodiscard]] std::size_t steps() const { return times.size(); }
    [[nodiscard]] std::span<const double> state(std::size_t step) const {
        return std::span<const double>(states).subspan(step * static_cast<std::size_t>(modes),
                                                       static_cast<std::size_t>(modes));
    }
    [[nodiscard]] double input_norm(std::size_t step) const {
        return std::hypot(inputs[step][0], inputs[step][1]);
    }
    /// Index of the stored sample nearest to t.
    [[nodiscard]] std::size_t index_at(double t) const {
        if (times.size() < 2) return 0;
        const double dt = times[1] - times[0];
        const auto i = static_cast<long long>(std::llround((t - times.front()) / dt));
        return static_cast<std::size_t>(std::clamp<long long>(i, 0, static_cast<long long>(times.size()) - 1));
    }
};

struct SimOptions {
    std::size_t quadrature_nodes = 256;
    double stability_fraction = 0.9;  ///< fraction of the RK4 real-axis limit used for substepping
};

/// Integrates x_n' = lambda_n x_n + c (x_n(t - h) - x_n) + b_n u + <d, e_n>,
/// u = K (x_1..x_N0), for n = 1..modes.
inline Trajectory simulate(const Scenario& sc, const SimOptions& opt = {}) {
    sc.validate();
    const auto modes = static_cast<std::size_t>(sc.modes);
    const auto N0 = static_cast<std::size_t>(sc.design.N0);
    const PlantParams& p = sc.params;
    const Spectrum spectrum = compute_spectrum(p, sc.modes);
    const Eigen::MatrixXd B = input_matrix(spectrum, modes);
    const ProjectionTable table(spectrum, modes, composite_gauss_legendre(opt.quadrature_nodes));
    const auto& nodes = table.rule().nodes;

    Trajectory traj;
    traj.modes = sc.modes;
    traj.N0 = sc.design.N0;
    traj.K = sc.design.K;

    // history, projected at every grid point of [-h_max, 0]
    const auto hist_points = static_cast<std::size_t>(std::ceil(p.h_max / sc.dt - 1e-9)) + 1;
    std::vector<double> hist(hist_points * modes);
    std::vector<double> samples(nodes.size());
    for (std::size_t k = 0; k < hist_points; ++k) {
        const double tau = -p.h_max + p.h_max * static_cast<double>(k) / static_cast<double>(hist_points - 1);
        for (std::size_t j = 0; j < nodes.size(); ++j) samples[j] = sc.history(tau, nodes[j]);
        table.project_samples(samples, std::span<double>(hist).subspan(k * modes, modes));
        traj.history_sup_norm = std::max(traj.history_sup_norm, std::sqrt(table.norm_squared(samples)));
    }
    const HermiteRecord history = history_from_samples(p.h_max, hist_points, modes, hist);
    const std::vector<double> x0(hist.end() - static_cast<std::ptrdiff_t>(modes), hist.end());

    // disturbance projections
    std::vector<double> shape_proj(modes, 0.0);
    double shape_norm = 0.0;
    if (sc.disturbance.is_separable()) {
        for (std::size_t j = 0; j < nodes.size(); ++j) samples[j] = sc.disturbance.shape(nodes[j]);
        table.project_samples(samples, shape_proj);
        shape_norm = std::sqrt(table.norm_squared(samples));
    }
    std::vector<double> dproj(modes, 0.0);
    double dproj_t = NAN;
    auto disturbance_at = [&](double t) -> const std::vector<double>& {
        if (sc.disturbance.is_zero() || t == dproj_t) return dproj;
        dproj_t = t;
        if (sc.disturbance.is_separable()) {
            const double amp = sc.disturbance.amplitude(t);
            for (std::size_t n = 0; n < modes; ++n) dproj[n] = amp * shape_proj[n];
        } else {
            for (std::size_t j = 0; j < nodes.size(); ++j) samples[j] = sc.disturbance(t, nodes[j]);
            table.project_samples(samples, dproj);
        }
        return dproj;
    };
    auto disturbance_norm = [&](double t) {
        if (sc.disturbance.is_zero()) return 0.0;
        if (sc.disturbance.is_separable()) return std::abs(sc.disturbance.amplitude(t)) * shape_norm;
        std::vector<double> vals(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j) vals[j] = sc.disturbance(t, nodes[j]);
        return std::sqrt(table.norm_squared(vals));
    };

    const double c = p.c;
    std::vector<double> shifted(modes);
    for (std::size_t n = 0; n < modes; ++n) shifted[n] = spectrum[n].lambda - c;
    const Eigen::MatrixXd& K = sc.design.K;
    auto feedback = [&](std::span<const double> x) {
        std::array<double, 2> u{0.0, 0.0};
        for (std::size_t n = 0; n < N0; ++n) {
            const auto i = static_cast<Eigen::Index>(n);
            u[0] += K(0, i) * x[n];
            u[1] += K(1, i) * x[n];
        }
        return u;
    };

    auto rhs = [&](double t, std::span<const double> x, std::span<const double> xd, std::span<double> dx) {
        const auto u = feedback(x);
        const auto& d = disturbance_at(t);
        for (std::size_t n = 0; n < modes; ++n) {
            const auto i = static_cast<Eigen::Index>(n);
            dx[n] = shifted[n] * x[n] + c * xd[n] + B(i, 0) * u[0] + B(i, 1) * u[1] + d[n];
        }
    };

    const auto steps = static_cast<std::size_t>(std::llround(sc.horizon / sc.dt));
    traj.times.reserve(steps + 1);
    traj.states.reserve((steps + 1) * modes);
    auto observe = [&](std::size_t, double t, std::span<const double> x, std::span<const double>) {
        traj.times.push_back(t);
        traj.states.insert(traj.states.end(), x.begin(), x.end());
        traj.inputs.push_back(feedback(x));
        double sq = 0.0;
        for (double v : x) sq += v * v;
        traj.state_norm.push_back(std::sqrt(sq));
        traj.delay_trace.push_back(sc.delay(t));
        traj.disturbance_norm.push_back(disturbance_norm(t));
    };

    // modes above N0 do not feed the input, so the closed-loop spectrum is
    // eig(A + BK) plus the shifted tail eigenvalues
    double radius = 0.0;
    for (std::size_t n = N0; n < modes; ++n) radius = std::max(radius, std::abs(shifted[n]));
    for (const auto& m : sc.design.mu) radius = std::max(radius, std::abs(m) + std::abs(c));
    if (sc.design.mu.empty()) {
        for (std::size_t n = 0; n < N0; ++n) radius = std::max(radius, std::abs(shifted[n]));
    }
    radius += std::abs(c);
    constexpr double rk4_real_limit = 2.785;
    const int substeps =
        std::max(1, static_cast<int>(std::ceil(sc.dt * radius / (opt.stability_fraction * rk4_real_limit))));

    integrate_rk4(history, x0, rhs, sc.delay, DdeGrid{sc.dt, substeps, sc.horizon, p.h_min, p.h_max}, observe);
    return traj;
}

/// y(t, x) sampled on a grid: values[i * xs.size() + j] = y(times[i], xs[j]).
struct FieldSamples {
    std::vector<double> times;
    std::vector<double> xs;
    std::vector<double> values;
};

/// Partial sum over the simulated modes, every `stride`-th stored step.
inline FieldSamples reconstruct(const Trajectory& traj, const Spectrum& spectrum, std::span<const double> x_grid,
                                std::size_t stride = 1) {
    const auto modes = static_cast<std::size_t>(traj.modes);
    if (spectrum.size() < modes) throw Error(ErrorCode::InvalidParams, "spectrum has fewer modes than trajectory");
    if (stride == 0) stride = 1;
    FieldSamples out;
    out.xs.assign(x_grid.begin(), x_grid.end());
    std::vector<double> basis(x_grid.size() * modes);
    for (std::size_t j = 0; j < x_grid.size(); ++j) {
        if (x_grid[j] < 0.0 || x_grid[j] > 1.0) throw Error(ErrorCode::InvalidParams, "x grid must lie in [0, 1]");
        for (std::size_t n = 0; n < modes; ++n) {
            basis[j * modes + n] = eigenfunction_value(spectrum[n], spectrum.params(), x_grid[j]);
        }
    }
    for (std::size_t k = 0; k < traj.steps(); k += stride) {
        out.times.push_back(traj.times[k]);
        const auto x = traj.state(k);
        for (std::size_t j = 0; j < x_grid.size(); ++j) {
            double y = 0.0;
            for (std::size_t n = 0; n < modes; ++n) y += x[n] * basis[j * modes + n];
            out.values.push_back(y);
        }
    }
    return out;
}

/// (1 - tau)^2 ((1 - 2x)/2 + 20 x (1 - x)(x - 3/5))
inline double reference_history(double tau, double x) {
    const double s = 1.0 - tau;
    return s * s * ((1.0 - 2.0 * x) / 2.0 + 20.0 * x * (1.0 - x) * (x - 0.6));
}

inline double reference_delay(double t) { return 2.0 + 1.5 * std::sin(t); }

/// Two-mode design with poles (-3.5, -4) for the reference plant.
inline ControllerDesign reference_design(Actuation actuation = Actuation::Both) {
    const PlantParams p = reference_plant();
    const Spectrum spectrum = compute_spectrum(p, 8);
    const TruncatedModel model = build_model(spectrum, select_mode_count(spectrum, p.c), actuation);
    return design_controller(model, {Pole(-3.5, 0.0), Pole(-4.0, 0.0)}, actuation);
}

/// Reference closed-loop scenario: 30 modes, h(t) = 2 + 1.5 sin t, the
/// quadratic-in-time history, and d(t, x) = d0(t) (1 - x) with the default
/// pulsed/persistent amplitude. T = 40 s, dt = 1e-3 s.
inline Scenario reference_scenario(Actuation actuation = Actuation::Both, PulsedAmplitude amplitude = {}) {
    Scenario sc;
    sc.params = reference_plant();
    sc.modes = 30;
    sc.design = reference_design(actuation);
    sc.horizon = 40.0;
    sc.dt = 1e-3;
    sc.delay = reference_delay;
    sc.history = reference_history;
    sc.disturbance = Disturbance::separable(amplitude, [](double x) { return 1.0 - x; });
    return sc;
}

}  // namespace rdstab
