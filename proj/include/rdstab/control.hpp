#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdstab/error.hpp"
#include "rdstab/model.hpp"

namespace rdstab {

using Pole = std::complex<double>;

/// Certified feedback design u = K Y for the truncated model.
struct ControllerDesign {
    int N0 = 0;
    Eigen::MatrixXd K;      ///< 2 x N0
    std::vector<Pole> mu;   ///< closed-loop poles, sorted by real part (descending)
    double alpha = 0.0;     ///< -max Re mu
    double beta = 0.0;      ///< -lambda_{N0+1} / 2
    double sigma = 0.0;     ///< certified decay rate of the truncated loop
    double kappa = 0.0;     ///< certified overall decay rate
    double delta = 0.0;     ///< finite-dimensional small-gain value at sigma
    double eta = 0.0;       ///< residual-dynamics small-gain value at kappa
    Actuation actuation = Actuation::Both;
};

struct PlacementOptions {
    /// Reject poles with Re mu >= -3|c| (or -2|c| for real poles under the relaxed rule).
    /// When false, violations only print a warning.
    bool enforce_delay_margin = true;
    /// Use the relaxed -2|c| bound when every target pole is real.
    bool relaxed_real_poles = false;
    double max_condition = 1e12;
};

namespace detail {

inline bool pole_less(const Pole& x, const Pole& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
}

inline bool is_real_pole(const Pole& p) { return std::abs(p.imag()) <= 1e-12 * (1.0 + std::abs(p)); }

/// Normalizes near-real poles, sorts, and checks distinctness and conjugate closure.
inline std::vector<Pole> canonical_poles(std::vector<Pole> mu) {
    for (auto& p : mu) {
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) {
            throw Error(ErrorCode::InvalidParams, "poles must be finite");
        }
        if (is_real_pole(p)) p = Pole(p.real(), 0.0);
    }
    std::sort(mu.begin(), mu.end(), pole_less);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (std::size_t j = i + 1; j < mu.size(); ++j) {
            const double scale = 1.0 + std::max(std::abs(mu[i]), std::abs(mu[j]));
            if (std::abs(mu[i] - mu[j]) <= 1e-10 * scale) {
                throw Error(ErrorCode::PolesNotDistinct, "target poles must be pairwise distinct");
            }
        }
    }
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i].imag() == 0.0) continue;
        // after sorting, a conjugate pair sits adjacent with the positive imaginary part first
        const bool first_of_pair = mu[i].imag() > 0.0 && i + 1 < mu.size() &&
                                   std::abs(mu[i + 1] - std::conj(mu[i])) <= 1e-12 * (1.0 + std::abs(mu[i]));
        const bool second_of_pair = mu[i].imag() < 0.0 && i > 0 &&
                                    std::abs(mu[i - 1] - std::conj(mu[i])) <= 1e-12 * (1.0 + std::abs(mu[i]));
        if (!first_of_pair && !second_of_pair) {
            throw Error(ErrorCode::PolesNotConjugateClosed, "complex target poles must come in conjugate pairs");
        }
        if (first_of_pair) mu[i + 1] = std::conj(mu[i]);
    }
    return mu;
}

/// Diagonal similarity by powers of two that evens out row and column norms
/// (the scaling pass of LAPACK's gebal). Eigenvalues are unchanged, but the
/// rank-one gains of single-input placement stop dominating the rounding.
inline Eigen::MatrixXd balanced(Eigen::MatrixXd M) {
    const Eigen::Index n = M.rows();
    for (bool changed = true; changed;) {
        changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double c = M.col(i).norm(), r = M.row(i).norm();
            double col = std::sqrt(std::max(0.0, c * c - M(i, i) * M(i, i)));
            double row = std::sqrt(std::max(0.0, r * r - M(i, i) * M(i, i)));
            if (col == 0.0 || row == 0.0) continue;
            const double total = col + row;
            double f = 1.0;
            while (col < row / 2.0) {
                f *= 2.0;
                col *= 2.0;
                row /= 2.0;
            }
            while (col >= row * 2.0) {
                f /= 2.0;
                col /= 2.0;
                row *= 2.0;
            }
            if (col + row < 0.95 * total) {
                M.col(i) *= f;
                M.row(i) /= f;
                changed = true;
            }
        }
    }
    return M;
}

inline std::vector<Pole> sorted_eigenvalues(const Eigen::MatrixXd& M) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(balanced(M), false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::PlacementIllConditioned, "closed-loop eigen-solve did not converge");
    }
    std::vector<Pole> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), pole_less);
    return ev;
}

inline void require_diagonal(const Eigen::MatrixXd& A) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw Error(ErrorCode::InvalidParams, "A must be square");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && A(i, j) != 0.0) throw Error(ErrorCode::InvalidParams, "A must be diagonal");
        }
        for (Eigen::Index j = 0; j < i; ++j) {
            if (A(i, i) == A(j, j)) throw Error(ErrorCode::InvalidParams, "A must have distinct diagonal entries");
        }
    }
}

/// Single input: with A = diag(lambda) and input column b, the gain
///   k_j = -prod_i (lambda_j - mu_i) / (b_j prod_{l != j} (lambda_j - lambda_l))
/// gives det(sI - A - b k) = prod_i (s - mu_i).
inline Eigen::RowVectorXd place_single_input(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                             const std::vector<Pole>& mu) {
    const Eigen::Index n = A.rows();
    Eigen::RowVectorXd k(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (b(j) == 0.0) {
            throw Error(ErrorCode::PlacementIllConditioned, "input column has a zero entry; mode uncontrollable");
        }
        const double lj = A(j, j);
        Pole num(1.0, 0.0);
        for (const auto& m : mu) num *= (lj - m);
        double den = b(j);
        for (Eigen::Index l = 0; l < n; ++l) {
            if (l != j) den *= (lj - A(l, l));
        }
        k(j) = -(num / den).real();
    }
    return k;
}

/// Two inputs: for each pole pick (v, g) in ker[mu I - A, -B] with v closest
/// to a unit-vector target, then K = G V^{-1}. Conjugate poles reuse the
/// conjugated pair so K stays real.
inline Eigen::MatrixXd place_two_input(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                       const std::vector<Pole>& mu, double max_condition) {
    using Mat = Eigen::MatrixXcd;
    const Eigen::Index n = A.rows();
    Mat V(n, n);
    Mat G(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Pole m = mu[static_cast<std::size_t>(i)];
        if (m.imag() < 0.0) {
            V.col(i) = V.col(i - 1).conjugate();
            G.col(i) = G.col(i - 1).conjugate();
            continue;
        }
        Mat M(n, n + 2);
        M.leftCols(n) = (m * Mat::Identity(n, n)) - A.cast<Pole>();
        M.rightCols(2) = -B.cast<Pole>();
        Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        if (sv(n - 1) <= 1e-14 * std::max(1.0, sv(0))) {
            throw Error(ErrorCode::PlacementIllConditioned, "pole placement kernel is degenerate");
        }
        const Mat Z = svd.matrixV().rightCols(2);
        Eigen::VectorXcd target = Eigen::VectorXcd::Zero(n);
        target(i) = 1.0;
        if (m.imag() > 0.0) target(i + 1) = Pole(0.0, 1.0);
        const Mat Zv = Z.topRows(n);
        const Eigen::VectorXcd z = Zv.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target);
        Eigen::VectorXcd v = Zv * z;
        Eigen::VectorXcd g = Z.bottomRows(2) * z;
        const double scale = v.norm();
        if (scale == 0.0) throw Error(ErrorCode::PlacementIllConditioned, "closed-loop eigenvector vanished");
        V.col(i) = v / scale;
        G.col(i) = g / scale;
    }
    Eigen::JacobiSVD<Mat> vsvd(V);
    const auto& vs = vsvd.singularValues();
    const double cond = vs(n - 1) > 0.0 ? vs(0) / vs(n - 1) : INFINITY;
    if (!(cond <= max_condition)) {
        throw Error(ErrorCode::PlacementIllConditioned,
                    "eigenvector assignment condition estimate " + std::to_string(cond) + " exceeds limit");
    }
    // K V = G  <=>  V^T K^T = G^T
    const Mat Kc = V.transpose().partialPivLu().solve(G.transpose()).transpose();
    return Kc.real();
}

}  // namespace detail

/// Gain K (2 x N0) with eig(A + B K) = mu. A must be diagonal with distinct
/// entries. Single-input modes use only the designated column of B and
/// leave the other row of K exactly zero. The result is checked against an
/// independent eigen-solve.
inline Eigen::MatrixXd place_poles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::vector<Pole> mu,
                                   Actuation actuation, double max_condition = 1e12) {
    detail::require_diagonal(A);
    const Eigen::Index n = A.rows();
    if (B.rows() != n || B.cols() != 2) throw Error(ErrorCode::InvalidParams, "B must be N0 x 2");
    if (static_cast<Eigen::Index>(mu.size()) != n) {
        throw Error(ErrorCode::InvalidParams, "need exactly N0 target poles");
    }
    mu = detail::canonical_poles(std::move(mu));

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2, n);
    switch (actuation) {
        case Actuation::Both: K = detail::place_two_input(A, B, mu, max_condition); break;
        case Actuation::LeftOnly: K.row(0) = detail::place_single_input(A, B.col(0), mu); break;
        case Actuation::RightOnly: K.row(1) = detail::place_single_input(A, B.col(1), mu); break;
    }

    const std::vector<Pole> ev = detail::sorted_eigenvalues(A + B * K);
    double max_abs = 0.0;
    double residual = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        max_abs = std::max(max_abs, std::abs(mu[i]));
        residual = std::max(residual, std::abs(ev[i] - mu[i]));
    }
    if (!(residual <= 1e-8 * (1.0 + max_abs))) {
        throw Error(ErrorCode::PlacementIllConditioned,
                    "placed poles miss their targets by " + std::to_string(residual));
    }
    return K;
}

inline double required_pole_margin(double c, bool all_real, bool relaxed_real_poles) {
    return (relaxed_real_poles && all_real ? 2.0 : 3.0) * std::abs(c);
}

/// Pole placement on a truncated model, with the delay-margin constraint
/// Re mu < -3|c| checked first.
inline Eigen::MatrixXd place_poles(const TruncatedModel& model, const std::vector<Pole>& mu, Actuation actuation,
                                   const PlacementOptions& opt = {}) {
    const bool all_real = std::all_of(mu.begin(), mu.end(), detail::is_real_pole);
    const double margin = required_pole_margin(model.params().c, all_real, opt.relaxed_real_poles);
    for (const auto& m : mu) {
        if (!(m.real() < -margin)) {
            const std::string msg = "pole real part " + std::to_string(m.real()) + " is not below -" +
                                    std::to_string(margin);
            if (opt.enforce_delay_margin) throw Error(ErrorCode::ConstraintViolated, msg);
            std::cerr << "warning: " << msg << " (design is not certified)\n";
            break;
        }
    }
    return place_poles(model.A, model.B, mu, actuation, opt.max_condition);
}

/// delta = |c|/(alpha - sigma) * (1 - exp(-(alpha - sigma) h_max) + w exp(sigma h_max)),
/// w = 2 in general and w = 1 under the relaxed real-pole rule.
inline double delta_certificate(double c, double alpha, double sigma, double h_max, bool relaxed_real_poles = false) {
    const double gap = alpha - sigma;
    const double w = relaxed_real_poles ? 1.0 : 2.0;
    return std::abs(c) / gap * (1.0 - std::exp(-gap * h_max) + w * std::exp(sigma * h_max));
}

/// eta = c^2/(beta (beta - kappa)) * ((1 - exp(-2 beta h)) (1 - exp(-2 (beta - kappa) h)) + 4 exp(2 kappa h))
inline double eta_certificate(double c, double beta, double kappa, double h_max) {
    const double gap = beta - kappa;
    return c * c / (beta * gap) *
           ((1.0 - std::exp(-2.0 * beta * h_max)) * (1.0 - std::exp(-2.0 * gap * h_max)) +
            4.0 * std::exp(2.0 * kappa * h_max));
}

struct RateCertificate {
    double alpha = 0.0;
    double beta = 0.0;
    double sigma = 0.0;
    double kappa = 0.0;
    double delta = 0.0;
    double eta = 0.0;
};

namespace detail {
/// Largest x in (0, upper) with f(x) < 1, for f increasing with f(0) < 1.
template <class F>
double largest_below_one(F&& f, double upper, double tol = 1e-9) {
    double lo = 0.0;
    double hi = upper;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 1.0) lo = mid;
        else hi = mid;
    }
    return lo;
}
}  // namespace detail

/// Decay rates sigma (truncated loop) and kappa (full system) certified by
/// the small-gain values delta(sigma) < 1 and eta(kappa) < 1.
inline RateCertificate certify_rates(const TruncatedModel& model, const std::vector<Pole>& mu, double h_max,
                                     bool relaxed_real_poles = false) {
    if (mu.empty()) throw Error(ErrorCode::InvalidParams, "no poles given");
    const double c = model.params().c;
    RateCertificate cert;
    double max_re = -INFINITY;
    for (const auto& m : mu) max_re = std::max(max_re, m.real());
    cert.alpha = -max_re;
    cert.beta = -model.next_lambda / 2.0;
    const bool all_real = std::all_of(mu.begin(), mu.end(), detail::is_real_pole);
    const bool relaxed = relaxed_real_poles && all_real;
    const double alpha_min = (relaxed ? 2.0 : 3.0) * std::abs(c);
    if (!(cert.alpha > alpha_min) || !(cert.alpha > 0.0)) {
        throw Error(ErrorCode::ConstraintViolated,
                    "alpha = " + std::to_string(cert.alpha) + " must exceed " + std::to_string(alpha_min));
    }
    if (!(cert.beta > std::sqrt(5.0) * std::abs(c)) || !(cert.beta > 0.0)) {
        throw Error(ErrorCode::ConstraintViolated,
                    "beta = " + std::to_string(cert.beta) + " must exceed sqrt(5)|c|");
    }
    cert.sigma = detail::largest_below_one(
        [&](double s) { return delta_certificate(c, cert.alpha, s, h_max, relaxed); }, cert.alpha);
    cert.kappa = detail::largest_below_one([&](double k) { return eta_certificate(c, cert.beta, k, h_max); },
                                           std::min(cert.beta, cert.sigma));
    if (!(cert.sigma > 0.0) || !(cert.kappa > 0.0)) {
        throw Error(ErrorCode::ConstraintViolated, "could not certify a positive decay rate");
    }
    cert.delta = delta_certificate(c, cert.alpha, cert.sigma, h_max, relaxed);
    cert.eta = eta_certificate(c, cert.beta, cert.kappa, h_max);
    return cert;
}

/// Place the poles and attach the certificates.
inline ControllerDesign design_controller(const TruncatedModel& model, const std::vector<Pole>& mu,
                                          Actuation actuation, const PlacementOptions& opt = {}) {
    ControllerDesign d;
    d.N0 = model.N0;
    d.actuation = actuation;
    d.K = place_poles(model, mu, actuation, opt);
    d.mu = detail::canonical_poles(mu);
    const RateCertificate cert = certify_rates(model, d.mu, model.params().h_max, opt.relaxed_real_poles);
    d.alpha = cert.alpha;
    d.beta = cert.beta;
    d.sigma = cert.sigma;
    d.kappa = cert.kappa;
    d.delta = cert.delta;
    d.eta = cert.eta;
    return d;
}

/// Real, evenly spaced poles mu_n = -alpha - (n - 1) * spacing.
inline std::vector<Pole> evenly_spaced_poles(int count, double alpha, double spacing) {
    std::vector<Pole> mu;
    mu.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) mu.emplace_back(-alpha - spacing * n, 0.0);
    return mu;
}

struct PolePolicy {
    double initial_margin = 0.5;  ///< first alpha tried is max(3|c|, kappa) + initial_margin
    double spacing = 0.5;
    double growth = 1.25;         ///< alpha multiplier per unsuccessful attempt
    Actuation actuation = Actuation::Both;
    int mode_cap = 512;
    int max_iterations = 400;
};

struct DecayRateDesign {
    TruncatedModel model;
    ControllerDesign design;
};

/// Grows N0 until eta(kappa_target) < 1 with beta > kappa_target, then pushes
/// the real poles left until a sigma > kappa_target is certified. The returned
/// design reports kappa = kappa_target.
inline DecayRateDesign design_for_decay_rate(const Spectrum& spectrum, double kappa_target,
                                             const PolePolicy& policy = {}) {
    if (!(kappa_target > 0.0)) throw Error(ErrorCode::InvalidParams, "kappa target must be > 0");
    const PlantParams& p = spectrum.params();
    const double c = p.c;
    const double h_max = p.h_max;

    int N0 = select_mode_count(spectrum, c, policy.mode_cap);
    auto current = std::make_shared<const Spectrum>(spectrum);
    for (;; ++N0) {
        if (N0 > policy.mode_cap) {
            throw Error(ErrorCode::ConstraintViolated, "mode cap exhausted before the residual certificate holds");
        }
        if (current->size() < static_cast<std::size_t>(N0) + 1) {
            current = detail::spectrum_with_at_least(*current, std::max<std::size_t>(2 * current->size(), N0 + 1));
        }
        const double beta = -(*current)[static_cast<std::size_t>(N0)].lambda / 2.0;
        if (beta > kappa_target && beta > std::sqrt(5.0) * std::abs(c) &&
            eta_certificate(c, beta, kappa_target, h_max) < 1.0) {
            break;
        }
    }

    DecayRateDesign out;
    out.model = build_model(*current, N0, policy.actuation);

    double alpha = std::max(3.0 * std::abs(c), kappa_target) + policy.initial_margin;
    for (int iter = 0;; ++iter) {
        if (iter >= policy.max_iterations) {
            throw Error(ErrorCode::ConstraintViolated, "pole search did not certify the requested rate");
        }
        const double sigma_max = detail::largest_below_one(
            [&](double s) { return delta_certificate(c, alpha, s, h_max); }, alpha);
        if (sigma_max > kappa_target) break;
        alpha *= policy.growth;
    }

    out.design = design_controller(out.model, evenly_spaced_poles(N0, alpha, policy.spacing), policy.actuation);
    out.design.kappa = kappa_target;
    out.design.eta = eta_certificate(c, out.design.beta, kappa_target, h_max);
    if (!(out.design.delta < 1.0 && out.design.eta < 1.0 && kappa_target < out.design.sigma &&
          out.design.sigma < out.design.alpha && kappa_target < out.design.beta)) {
        throw Error(ErrorCode::ConstraintViolated, "decay-rate design failed its certificate check");
    }
    return out;
}

}  // namespace rdstab
