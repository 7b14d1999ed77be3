// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdstab/rdstab.hpp"

using namespace rdstab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

PlantParams random_plant(std::mt19937_64& rng) {
    PlantParams p;
    p.a = uniform(rng, 0.05, 1.0);
    p.b = uniform(rng, -1.0, 4.0);
    p.c = uniform(rng, -2.0, 2.0);
    p.theta1 = uniform(rng, 0.05, std::numbers::pi / 2 - 0.05);
    p.theta2 = uniform(rng, 0.05, std::numbers::pi / 2 - 0.05);
    p.h_min = uniform(rng, 0.1, 1.0);
    p.h_max = p.h_min + uniform(rng, 0.5, 3.0);
    return p;
}

int kalman_rank(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd C(n, n * B.cols());
    Eigen::MatrixXd block = B;
    for (Eigen::Index k = 0; k < n; ++k) {
        C.middleCols(k * B.cols(), B.cols()) = block;
        block = A * block;
    }
    return static_cast<int>(Eigen::FullPivLU<Eigen::MatrixXd>(C).rank());
}

/// Largest distance between the sorted eigenvalues of A + B K and the sorted targets.
double pole_mismatch(const TruncatedModel& m, const ControllerDesign& d) {
    const Eigen::MatrixXd Acl = m.A + m.B * d.K;
    Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(Acl);
    std::vector<std::complex<double>> got(es.eigenvalues().begin(), es.eigenvalues().end());
    std::vector<std::complex<double>> want = d.mu;
    auto order = [](const auto& x, const auto& y) { return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag(); };
    std::sort(got.begin(), got.end(), order);
    std::sort(want.begin(), want.end(), order);
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    return worst;
}

/// x' = lambda x + c x(t - h(t)), history 1; returns x on the output grid.
std::vector<double> scalar_dde(double lambda, double c, const std::function<double(double)>& h, double h_min,
                               double h_max, double dt, double T) {
    DdeGrid grid;
    grid.dt = dt;
    grid.horizon = T;
    grid.h_min = h_min;
    grid.h_max = h_max;
    const HermiteRecord hist = history_from_samples(h_max, 11, 1, std::vector<double>(11, 1.0));
    const double x0[1] = {1.0};
    std::vector<double> out;
    integrate_rk4(
        hist, std::span<const double>(x0, 1),
        [&](double, std::span<const double> x, std::span<const double> xd, std::span<double> dx) {
            dx[0] = lambda * x[0] + c * xd[0];
        },
        h, grid, [&](std::size_t, double, std::span<const double> x, std::span<const double>) { out.push_back(x[0]); });
    return out;
}

Outcome eigenvalues_match() {
    const auto lam = eigenvalues(reference_plant(), 3);
    const double want[3] = {2.5561, -0.1186, -6.2299};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(lam[static_cast<std::size_t>(i)] - want[i]));
    return {worst <= 1e-3, fmt("lambda = %.6f, %.6f, %.6f; max deviation %.2e (tol 1e-3)", lam[0], lam[1], lam[2], worst)};
}

Outcome mode_count() {
    const PlantParams p = reference_plant();
    const Spectrum s = compute_spectrum(p, 8);
    const int N0 = select_mode_count(s, p.c);
    const double thr = -2.0 * std::sqrt(5.0) * std::abs(p.c);
    const bool between = s[1].lambda > thr && s[2].lambda < thr;
    return {N0 == 2 && between, fmt("N0 = %d, threshold %.4f between lambda_2 and lambda_3: %s", N0, thr, between ? "yes" : "no")};
}

Outcome placement() {
    const PlantParams p = reference_plant();
    const Spectrum s = compute_spectrum(p, 8);
    const std::vector<Pole> mu{Pole(-3.5, 0.0), Pole(-4.0, 0.0)};
    const TruncatedModel both = build_model(s, 2, Actuation::Both);
    const TruncatedModel left = build_model(s, 2, Actuation::LeftOnly);
    const ControllerDesign db = design_controller(both, mu, Actuation::Both);
    const ControllerDesign dl = design_controller(left, mu, Actuation::LeftOnly);
    const double eb = pole_mismatch(both, db);
    const double el = pole_mismatch(left, dl);
    const bool row_zero = dl.K.row(1).norm() == 0.0;
    const int r = kalman_rank(both.A, both.B);
    const int r1 = kalman_rank(both.A, both.B.col(0));
    const int r2 = kalman_rank(both.A, both.B.col(1));
    const bool ok = eb <= 1e-8 && el <= 1e-8 && row_zero && r == 2 && r1 == 2 && r2 == 2;
    return {ok, fmt("pole error two-input %.1e, u2 = 0 %.1e (tol 1e-8); Kalman ranks %d/%d/%d", eb, el, r, r1, r2)};
}

Outcome lifting_invariance() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int draws = 0, skipped_k = 0;
    while (draws < 20) {
        const PlantParams p = random_plant(rng);
        const Spectrum s = compute_spectrum(p, 30);
        for (const auto& pair : s.pairs()) {
            for (int m = 1; m <= 2; ++m) {
                const double ref = input_coefficient(pair, p, m, 2);
                for (int k = 3; k <= 6; ++k) {
                    try {
                        worst = std::max(worst, std::abs(input_coefficient(pair, p, m, k) - ref));
                    } catch (const Error&) {
                        ++skipped_k;
                    }
                }
            }
        }
        ++draws;
    }
    return {worst <= 1e-11 && skipped_k == 0,
            fmt("max |b(k) - b(2)| = %.2e over %d draws, 30 modes, k = 2..6 (tol 1e-11)", worst, draws)};
}

Outcome certificates() {
    std::mt19937_64 rng(99);
    int bad_delta = 0, bad_eta = 0;
    for (int i = 0; i < 1000; ++i) {
        const double c = uniform(rng, -3.0, 3.0);
        const double h = uniform(rng, 0.05, 10.0);
        const double alpha = 3.0 * std::abs(c) * uniform(rng, 1.0 + 1e-9, 4.0) + 1e-12;
        const double beta = std::sqrt(5.0) * std::abs(c) * uniform(rng, 1.0 + 1e-9, 4.0) + 1e-12;
        if (!(delta_certificate(c, alpha, 0.0, h) < 1.0)) ++bad_delta;
        if (!(eta_certificate(c, beta, 0.0, h) < 1.0)) ++bad_eta;
    }
    const ControllerDesign d = reference_design(Actuation::Both);
    const double d0 = delta_certificate(1.0, d.alpha, 0.0, 3.5);
    const double e0 = eta_certificate(1.0, d.beta, 0.0, 3.5);
    const bool ok = bad_delta == 0 && bad_eta == 0 && d.sigma > 0.0 && d.kappa > 0.0 && std::abs(d0 - 0.857) <= 1e-3 &&
                    std::abs(e0 - 0.515) <= 1e-3;
    return {ok, fmt("random failures delta %d, eta %d of 1000; sigma = %.6f kappa = %.6f; delta(0) = %.4f eta(0) = %.4f",
                    bad_delta, bad_eta, d.sigma, d.kappa, d0, e0)};
}

Outcome dde_oracle() {
    const double lambda = -1.0, c = 0.5;
    const auto x = scalar_dde(lambda, c, [](double) { return 1.0; }, 1.0, 1.0, 1e-3, 1.0);
    const double A = 1.0 + c / lambda;
    double err = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = 1e-3 * static_cast<double>(k);
        err = std::max(err, std::abs(x[k] - (A * std::exp(lambda * t) - c / lambda)));
    }
    auto h = [](double t) { return 1.0 + 0.3 * std::sin(t); };
    const double ref = scalar_dde(-1.0, 0.5, h, 0.7, 1.3, 0.04 / 64, 5.0).back();
    std::vector<double> e;
    for (double dt : {0.04, 0.02, 0.01, 0.005}) e.push_back(std::abs(scalar_dde(-1.0, 0.5, h, 0.7, 1.3, dt, 5.0).back() - ref));
    double order = INFINITY;
    for (std::size_t i = 1; i < e.size(); ++i) order = std::min(order, std::log2(e[i - 1] / e[i]));
    return {err <= 1e-7 && order >= 3.0,
            fmt("method-of-steps error %.2e on [0, h] (tol 1e-7); worst observed order %.2f (need >= 3)", err, order)};
}

Outcome fd_cross_check() {
    const Scenario sc = reference_scenario();
    const Trajectory modal = simulate(sc);
    Scenario fine = sc;
    fine.modes = 120;
    const Trajectory modal120 = simulate(fine);
    const FdTrajectory fd128 = fd_oracle(sc, 128);
    const FdTrajectory fd256 = fd_oracle(sc, 256);
    const double g128 = relative_norm_gap(modal, fd128);
    const double g256 = relative_norm_gap(modal, fd256);
    const double ratio = g128 / g256;
    const double r120 = relative_norm_gap(modal120, fd128) / relative_norm_gap(modal120, fd256);
    const bool ok = g256 <= 2e-2 && ratio >= 3.0 && ratio <= 5.0;
    return {ok, fmt("30 modes: gap %.2e at M = 256 (tol 2e-2), M 128 -> 256 ratio %.2f (need 3..5); "
                    "120-mode reference ratio %.2f",
                    g256, ratio, r120)};
}

Outcome stabilization() {
    std::string detail;
    bool ok = true;
    for (Actuation act : {Actuation::Both, Actuation::LeftOnly}) {
        Scenario sc = reference_scenario(act);
        sc.disturbance = Disturbance{};
        const Trajectory traj = simulate(sc);
        const double kfit = fit_decay(traj, 0.0, sc.horizon).kappa;
        const double at8 = traj.state_norm[traj.index_at(8.0)] / traj.history_sup_norm;
        const bool pass = kfit >= sc.design.kappa && at8 <= 0.05;
        ok = ok && pass;
        detail += fmt("%s: kappa_fit %.4f vs certified %.4f, ||y(8)||/sup %.4f (tol 0.05); ",
                      act == Actuation::Both ? "two-input" : "u2 = 0", kfit, sc.design.kappa, at8);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome fading_memory() {
    const RunConfig cfg;
    const DecayRateDesign d = design_from_config(cfg);
    const IssSweepReport rep = iss_sweep(cfg, d.design, d.design.kappa);
    const bool ok = rep.batch_violations == 0 && rep.holdout_violations == 0 &&
                    rep.min_recovery_rate >= rep.fit.kappa_fit / 2.0 && rep.input_bound;
    return {ok, fmt("kappa %.4f C0 %.4f C1 %.4f; holdout violations %zu (worst excess %.2e at t = %.2f), "
                    "recovery rate %.4f (need >= %.4f)",
                    rep.fit.kappa_fit, rep.fit.C0_fit, rep.fit.C1_fit, rep.holdout_violations, rep.holdout_residual,
                    rep.holdout_worst_time, rep.min_recovery_rate, rep.fit.kappa_fit / 2.0)};
}

Outcome invariants() {
    // superposition over histories and disturbances
    Scenario base = reference_scenario();
    base.horizon = 20.0;
    auto d1 = [](double t, double x) { return std::sin(2.0 * t) * x * x; };
    auto d2 = [](double t, double x) { return t > 5.0 ? std::cos(x + t) : 0.0; };
    const double al = 0.7, be = -1.3;
    Scenario s1 = base, s2 = base, s12 = base;
    s1.disturbance = Disturbance::field(d1);
    s2.history = [](double tau, double x) { return std::cos(3.0 * x) * (1.0 + 0.2 * tau); };
    s2.disturbance = Disturbance::field(d2);
    s12.history = [&](double tau, double x) { return al * base.history(tau, x) + be * s2.history(tau, x); };
    s12.disturbance = Disturbance::field([&](double t, double x) { return al * d1(t, x) + be * d2(t, x); });
    const Trajectory t1 = simulate(s1), t2 = simulate(s2), t12 = simulate(s12);
    double gap = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < t12.states.size(); ++i) {
        gap = std::max(gap, std::abs(t12.states[i] - (al * t1.states[i] + be * t2.states[i])));
        scale = std::max(scale, std::abs(t12.states[i]));
    }
    const double lin = gap / scale;

    // Parseval: ||sum y_n e_n||^2 by quadrature against sum y_n^2 at every step
    const Scenario sc = reference_scenario();
    const Trajectory traj = simulate(sc);
    const Spectrum s = compute_spectrum(sc.params, sc.modes);
    const QuadratureRule rule = composite_gauss_legendre(512);
    const auto modes = static_cast<std::size_t>(sc.modes);
    Eigen::MatrixXd E(static_cast<Eigen::Index>(rule.size()), static_cast<Eigen::Index>(modes));
    for (std::size_t j = 0; j < rule.size(); ++j) {
        for (std::size_t n = 0; n < modes; ++n) {
            E(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n)) = eigenfunction_value(s[n], sc.params, rule.nodes[j]);
        }
    }
    const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.size()));
    double parseval = 0.0;
    for (std::size_t k = 0; k < traj.steps(); ++k) {
        const auto y = traj.state(k);
        const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(modes));
        const Eigen::VectorXd field = E * Y;
        const double quad = w.dot(field.cwiseAbs2());
        const double sum = Y.squaredNorm();
        const double norm2 = traj.state_norm[k] * traj.state_norm[k];
        parseval = std::max(parseval, std::max(std::abs(quad - sum), std::abs(norm2 - sum)) / sum);
    }
    return {lin <= 1e-9 && parseval <= 1e-10,
            fmt("superposition gap %.2e (tol 1e-9); Parseval worst relative error %.2e over %zu steps (tol 1e-10)", lin,
                parseval, traj.steps())};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {1, "eigenvalue regression", 1.0, eigenvalues_match},
        {2, "mode-count selection", 1.0, mode_count},
        {3, "pole placement", 1.0, placement},
        {4, "lifting-exponent invariance", 1.0, lifting_invariance},
        {5, "small-gain certificates", 1.0, certificates},
        {6, "DDE integrator oracle", 5.0, dde_oracle},
        {7, "modal vs finite-difference", 120.0, fd_cross_check},
        {8, "stabilization", 60.0, stabilization},
        {9, "fading-memory ISS", 300.0, fading_memory},
        {10, "linearity and Parseval", 60.0, invariants},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("[%s] criterion %d: %s: %s [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d of 10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
