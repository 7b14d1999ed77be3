#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rdstab/dde.hpp"
#include "rdstab/sim.hpp"

namespace rdstab {

/// Finite-difference solution of the PDE itself, used to cross-check the
/// modal simulator.
struct FdTrajectory {
    int grid_intervals = 0;
    int substeps = 1;
    std::vector<double> times;
    std::vector<double> state_norm;
    std::vector<std::array<double, 2>> inputs;
    std::vector<double> nodes;
    std::vector<double> field_times;
    std::vector<double> field;  ///< row-major [field_time][node]
};

struct FdOptions {
    std::size_t field_stride = 100;  ///< store nodal values every n-th output step
    double stability_fraction = 0.9; ///< fraction of the RK4 real-axis limit used for substepping
};

/// Second-order central differences on M + 1 nodes; the Robin conditions
/// enter through ghost nodes eliminated from
///   cos t1 y_0 - sin t1 (y_1 - y_-1)/(2 dx) = u1,
///   cos t2 y_M + sin t2 (y_M+1 - y_M-1)/(2 dx) = u2.
/// u is K applied to trapezoidal projections of the nodal field on e_1..e_N0.
/// Same RK4 + Hermite delayed lookup as the modal simulator, with as many
/// RK4 substeps per output step as explicit stability needs.
inline FdTrajectory fd_oracle(const Scenario& sc, int M, const FdOptions& opt = {}) {
    sc.validate();
    if (M < 64) throw Error(ErrorCode::InvalidScenario, "finite-difference grid needs M >= 64");
    const PlantParams& p = sc.params;
    const auto n_nodes = static_cast<std::size_t>(M) + 1;
    const double dx = 1.0 / M;
    const double a = p.a;
    const double s1 = std::sin(p.theta1), c1 = std::cos(p.theta1);
    const double s2 = std::sin(p.theta2), c2 = std::cos(p.theta2);

    FdTrajectory out;
    out.grid_intervals = M;
    out.nodes.resize(n_nodes);
    for (std::size_t j = 0; j < n_nodes; ++j) out.nodes[j] = static_cast<double>(j) * dx;

    std::vector<double> trap(n_nodes, dx);
    trap.front() = trap.back() = 0.5 * dx;

    const auto N0 = static_cast<std::size_t>(sc.design.N0);
    const Spectrum spectrum = compute_spectrum(p, sc.design.N0);
    std::vector<double> weighted_basis(N0 * n_nodes);  // [mode][node]
    for (std::size_t n = 0; n < N0; ++n) {
        for (std::size_t j = 0; j < n_nodes; ++j) {
            weighted_basis[n * n_nodes + j] = trap[j] * eigenfunction_value(spectrum[n], p, out.nodes[j]);
        }
    }
    const Eigen::MatrixXd& K = sc.design.K;
    auto feedback = [&](std::span<const double> y) {
        std::array<double, 2> u{0.0, 0.0};
        for (std::size_t n = 0; n < N0; ++n) {
            double coeff = 0.0;
            const double* w = &weighted_basis[n * n_nodes];
            for (std::size_t j = 0; j < n_nodes; ++j) coeff += w[j] * y[j];
            const auto i = static_cast<Eigen::Index>(n);
            u[0] += K(0, i) * coeff;
            u[1] += K(1, i) * coeff;
        }
        return u;
    };
    auto norm = [&](std::span<const double> y) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_nodes; ++j) s += trap[j] * y[j] * y[j];
        return std::sqrt(s);
    };

    const auto hist_points = static_cast<std::size_t>(std::ceil(p.h_max / sc.dt - 1e-9)) + 1;
    std::vector<double> hist(hist_points * n_nodes);
    for (std::size_t k = 0; k < hist_points; ++k) {
        const double tau = -p.h_max + p.h_max * static_cast<double>(k) / static_cast<double>(hist_points - 1);
        for (std::size_t j = 0; j < n_nodes; ++j) hist[k * n_nodes + j] = sc.history(tau, out.nodes[j]);
    }
    const HermiteRecord history = history_from_samples(p.h_max, hist_points, n_nodes, hist);
    const std::vector<double> y0(hist.end() - static_cast<std::ptrdiff_t>(n_nodes), hist.end());

    // Gershgorin bound on the spatial operator's spectral radius
    const double diff = a / (dx * dx);
    const double robin = 2.0 * a * std::max(std::abs(c1 / s1), std::abs(c2 / s2)) / dx;
    const double radius = 4.0 * diff + robin + std::abs(p.b);
    constexpr double rk4_real_limit = 2.785;
    out.substeps = std::max(1, static_cast<int>(std::ceil(sc.dt * radius / (opt.stability_fraction * rk4_real_limit))));

    std::vector<double> dist(n_nodes, 0.0);
    double dist_t = NAN;
    auto disturbance_at = [&](double t) -> const std::vector<double>& {
        if (sc.disturbance.is_zero() || t == dist_t) return dist;
        dist_t = t;
        for (std::size_t j = 0; j < n_nodes; ++j) dist[j] = sc.disturbance(t, out.nodes[j]);
        return dist;
    };

    const double b = p.b;
    const double c = p.c;
    auto rhs = [&](double t, std::span<const double> y, std::span<const double> yd, std::span<double> dy) {
        const auto u = feedback(y);
        const auto& d = disturbance_at(t);
        const std::size_t last = n_nodes - 1;
        const double ghost_left = y[1] - 2.0 * dx * (c1 * y[0] - u[0]) / s1;
        const double ghost_right = y[last - 1] + 2.0 * dx * (u[1] - c2 * y[last]) / s2;
        dy[0] = diff * (y[1] - 2.0 * y[0] + ghost_left) + b * y[0] + c * yd[0] + d[0];
        for (std::size_t j = 1; j < last; ++j) {
            dy[j] = diff * (y[j + 1] - 2.0 * y[j] + y[j - 1]) + b * y[j] + c * yd[j] + d[j];
        }
        dy[last] = diff * (ghost_right - 2.0 * y[last] + y[last - 1]) + b * y[last] + c * yd[last] + d[last];
    };

    const std::size_t stride = std::max<std::size_t>(1, opt.field_stride);
    auto observe = [&](std::size_t step, double t, std::span<const double> y, std::span<const double>) {
        out.times.push_back(t);
        out.state_norm.push_back(norm(y));
        out.inputs.push_back(feedback(y));
        if (step % stride == 0) {
            out.field_times.push_back(t);
            out.field.insert(out.field.end(), y.begin(), y.end());
        }
    };
    integrate_rk4(history, y0, rhs, sc.delay, DdeGrid{sc.dt, out.substeps, sc.horizon, p.h_min, p.h_max}, observe);
    return out;
}

/// sup_t | ||y||_modal - ||y||_fd | / sup_t ||y||_modal over the common grid.
inline double relative_norm_gap(const Trajectory& modal, const FdTrajectory& fd) {
    const std::size_t n = std::min(modal.state_norm.size(), fd.state_norm.size());
    double gap = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gap = std::max(gap, std::abs(modal.state_norm[i] - fd.state_norm[i]));
        scale = std::max(scale, modal.state_norm[i]);
    }
    return scale > 0.0 ? gap / scale : gap;
}

}  // namespace rdstab
