#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rdstab/error.hpp"
#include "rdstab/params.hpp"
#include "rdstab/quadrature.hpp"

namespace rdstab {

/// One eigenpair of the shifted operator a f'' + (b + c) f under homogeneous
/// Robin conditions. The unnormalized eigenfunction is
///   phi(x) = r cos(r x) + h1 sin(r x),  e = phi / norm_phi.
struct EigenPair {
    int n = 0;
    double r = 0.0;
    double lambda = 0.0;
    double norm_phi = 0.0;
};

struct RootScanOptions {
    double step = 1e-3;      ///< sign-change scan step
    double max_r = 1e5;      ///< scan cap; exceeded -> RootScanExhausted
    double bracket_width = 1e-13;
};

/// (h1 h2 - r^2) sin r + (h1 + h2) r cos r
inline double characteristic_fn(const PlantParams& p, double r) {
    const double h1 = p.h1();
    const double h2 = p.h2();
    return (h1 * h2 - r * r) * std::sin(r) + (h1 + h2) * r * std::cos(r);
}

inline double characteristic_derivative(const PlantParams& p, double r) {
    const double h1 = p.h1();
    const double h2 = p.h2();
    const double s = std::sin(r);
    const double c = std::cos(r);
    return -2.0 * r * s + (h1 * h2 - r * r) * c + (h1 + h2) * (c - r * s);
}

/// The single place where lambda is formed from r, so every caller agrees bit-for-bit.
inline double eigenvalue_from_root(const PlantParams& p, double r) { return p.b + p.c - p.a * r * r; }

/// First `count` strictly positive roots of the characteristic function, increasing.
inline std::vector<double> find_roots(const PlantParams& p, int count, const RootScanOptions& opt = {}) {
    p.validate();
    if (count < 1) throw Error(ErrorCode::InvalidParams, "root count must be >= 1");
    if (!(opt.step > 0.0)) throw Error(ErrorCode::InvalidParams, "scan step must be > 0");

    std::vector<double> roots;
    roots.reserve(static_cast<std::size_t>(count));

    // g(r)/r -> h1 h2 + h1 + h2 > 0 as r -> 0+, so no root hides in (0, step).
    double left = opt.step;
    double g_left = characteristic_fn(p, left);
    for (long k = 2; static_cast<int>(roots.size()) < count; ++k) {
        const double right = static_cast<double>(k) * opt.step;
        if (right > opt.max_r) {
            throw Error(ErrorCode::RootScanExhausted,
                        "found " + std::to_string(roots.size()) + " of " + std::to_string(count) +
                            " roots below r = " + std::to_string(opt.max_r));
        }
        const double g_right = characteristic_fn(p, right);
        if (g_right == 0.0) {
            roots.push_back(right);
            // skip past the exact root so it is not bracketed twice
            left = right + 0.5 * opt.step;
            g_left = characteristic_fn(p, left);
            continue;
        }
        if ((g_left < 0.0) != (g_right < 0.0)) {
            double lo = left;
            double hi = right;
            double g_lo = g_left;
            while (hi - lo > opt.bracket_width) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                const double g_mid = characteristic_fn(p, mid);
                if (g_mid == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if ((g_mid < 0.0) == (g_lo < 0.0)) {
                    lo = mid;
                    g_lo = g_mid;
                } else {
                    hi = mid;
                }
            }
            double root = 0.5 * (lo + hi);
            // one Newton polish, kept only if it lands inside the bracket and improves |g|
            const double d = characteristic_derivative(p, root);
            if (d != 0.0) {
                const double polished = root - characteristic_fn(p, root) / d;
                if (polished >= left && polished <= right &&
                    std::abs(characteristic_fn(p, polished)) <= std::abs(characteristic_fn(p, root))) {
                    root = polished;
                }
            }
            roots.push_back(root);
        }
        left = right;
        g_left = g_right;
    }
    return roots;
}

/// L2(0,1) norm of phi(x) = r cos(r x) + h1 sin(r x), closed form
///   ||phi||^2 = (r^2 + h1^2)/2 + (r^2 - h1^2) sin(2r)/(4r) + h1 (1 - cos 2r)/2,
/// regrouped as r^2 (1/2 + s) + h1^2 (1/2 - s) + h1 sin^2 r with s = sin(2r)/(4r)
/// so that nothing cancels for small r.
inline double phi_norm(const PlantParams& p, double r) {
    const double h1 = p.h1();
    const double u = 2.0 * r;
    double half_minus_s;  // (u - sin u) / (2u)
    if (std::abs(u) < 0.1) {
        const double u2 = u * u;
        half_minus_s = u2 / 12.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0 * (1.0 - u2 / 72.0)));
    } else {
        half_minus_s = (u - std::sin(u)) / (2.0 * u);
    }
    const double half_plus_s = 1.0 - half_minus_s;
    const double sr = std::sin(r);
    return std::sqrt(r * r * half_plus_s + h1 * h1 * half_minus_s + h1 * sr * sr);
}

/// Immutable ordered eigenstructure of the shifted Robin operator.
class Spectrum {
public:
    Spectrum(PlantParams params, std::vector<EigenPair> pairs)
        : params_(params), pairs_(std::move(pairs)) {}

    [[nodiscard]] const PlantParams& params() const { return params_; }
    [[nodiscard]] std::span<const EigenPair> pairs() const { return pairs_; }
    [[nodiscard]] std::size_t size() const { return pairs_.size(); }
    /// Zero-based access; pairs()[0] is the n = 1 mode.
    [[nodiscard]] const EigenPair& operator[](std::size_t i) const { return pairs_.at(i); }

    [[nodiscard]] std::vector<double> eigenvalues() const {
        std::vector<double> out;
        out.reserve(pairs_.size());
        for (const auto& pair : pairs_) out.push_back(pair.lambda);
        return out;
    }

private:
    PlantParams params_;
    std::vector<EigenPair> pairs_;
};

inline Spectrum compute_spectrum(const PlantParams& p, int count, const RootScanOptions& opt = {}) {
    const std::vector<double> roots = find_roots(p, count, opt);
    std::vector<EigenPair> pairs;
    pairs.reserve(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        pairs.push_back(EigenPair{static_cast<int>(i) + 1, roots[i], eigenvalue_from_root(p, roots[i]),
                                  phi_norm(p, roots[i])});
    }
    return Spectrum(p, std::move(pairs));
}

inline std::vector<double> eigenvalues(const PlantParams& p, int count, const RootScanOptions& opt = {}) {
    return compute_spectrum(p, count, opt).eigenvalues();
}

/// e_n(x)
inline double eigenfunction_value(const EigenPair& pair, const PlantParams& p, double x) {
    return (pair.r * std::cos(pair.r * x) + p.h1() * std::sin(pair.r * x)) / pair.norm_phi;
}

/// e_n'(x), from phi'(x) = -r^2 sin(r x) + h1 r cos(r x).
inline double eigenfunction_derivative(const EigenPair& pair, const PlantParams& p, double x) {
    const double r = pair.r;
    return (-r * r * std::sin(r * x) + p.h1() * r * std::cos(r * x)) / pair.norm_phi;
}

/// e_n''(x) = -r^2 e_n(x).
inline double eigenfunction_second_derivative(const EigenPair& pair, const PlantParams& p, double x) {
    return -pair.r * pair.r * eigenfunction_value(pair, p, x);
}

/// Table of w_j * e_n(x_j), laid out [node][mode], used for repeated projections.
class ProjectionTable {
public:
    ProjectionTable(const Spectrum& spectrum, std::size_t count, QuadratureRule rule)
        : rule_(std::move(rule)), count_(count), weighted_(rule_.size() * count) {
        if (count > spectrum.size()) {
            throw Error(ErrorCode::InvalidParams, "projection requests more modes than the spectrum holds");
        }
        for (std::size_t j = 0; j < rule_.size(); ++j) {
            for (std::size_t n = 0; n < count; ++n) {
                weighted_[j * count + n] =
                    rule_.weights[j] * eigenfunction_value(spectrum[n], spectrum.params(), rule_.nodes[j]);
            }
        }
    }

    [[nodiscard]] const QuadratureRule& rule() const { return rule_; }
    [[nodiscard]] std::size_t modes() const { return count_; }

    /// values[j] = f(rule().nodes[j]); writes <f, e_n> into out[n].
    void project_samples(std::span<const double> values, std::span<double> out) const {
        for (std::size_t n = 0; n < count_; ++n) out[n] = 0.0;
        for (std::size_t j = 0; j < rule_.size(); ++j) {
            const double v = values[j];
            if (v == 0.0) continue;
            const double* row = &weighted_[j * count_];
            for (std::size_t n = 0; n < count_; ++n) out[n] += v * row[n];
        }
    }

    /// Squared L2 norm of sampled values.
    [[nodiscard]] double norm_squared(std::span<const double> values) const {
        double s = 0.0;
        for (std::size_t j = 0; j < rule_.size(); ++j) s += rule_.weights[j] * values[j] * values[j];
        return s;
    }

private:
    QuadratureRule rule_;
    std::size_t count_;
    std::vector<double> weighted_;
};

/// Modal coefficients <profile, e_n>, n = 1..count, by composite Gauss-Legendre quadrature.
inline std::vector<double> project(const std::function<double(double)>& profile, const Spectrum& spectrum,
                                   std::size_t count, std::size_t nodes = 256) {
    const ProjectionTable table(spectrum, count, composite_gauss_legendre(nodes));
    std::vector<double> samples(table.rule().size());
    for (std::size_t j = 0; j < samples.size(); ++j) samples[j] = profile(table.rule().nodes[j]);
    std::vector<double> coeffs(count);
    table.project_samples(samples, coeffs);
    return coeffs;
}

}  // namespace rdstab
