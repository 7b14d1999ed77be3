#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rdstab/error.hpp"

namespace rdstab {

/// Dense record of a vector trajectory on a uniform time grid: states and
/// their time derivatives, evaluated between knots by cubic Hermite
/// interpolation. Old samples can be discarded to bound memory.
class HermiteRecord {
public:
    HermiteRecord(double t0, double spacing, std::size_t dim) : t0_(t0), spacing_(spacing), dim_(dim) {}

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] double spacing() const { return spacing_; }
    [[nodiscard]] bool empty() const { return count() == 0; }
    [[nodiscard]] std::size_t count() const { return x_.size() / dim_; }
    [[nodiscard]] double t_begin() const { return t0_ + static_cast<double>(offset_) * spacing_; }
    [[nodiscard]] double t_end() const {
        return t0_ + static_cast<double>(offset_ + count() - 1) * spacing_;
    }

    void push(std::span<const double> x, std::span<const double> dxdt) {
        x_.insert(x_.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(dim_));
        dx_.insert(dx_.end(), dxdt.begin(), dxdt.begin() + static_cast<std::ptrdiff_t>(dim_));
    }

    /// Extra knot strictly inside the last open cell (after t_end()), used at
    /// points where a higher derivative jumps so no cubic spans the jump.
    /// Knots must arrive in increasing time.
    void push_breakpoint(double t, std::span<const double> x, std::span<const double> dxdt) {
        extra_t_.push_back(t);
        ex_.insert(ex_.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(dim_));
        edx_.insert(edx_.end(), dxdt.begin(), dxdt.begin() + static_cast<std::ptrdiff_t>(dim_));
    }

    [[nodiscard]] std::size_t breakpoint_count() const { return extra_t_.size(); }

    /// Drops knots strictly before t (keeping the knot that brackets t).
    void discard_before(double t) {
        const double rel = (t - t_begin()) / spacing_;
        if (rel < 2.0) return;
        const auto drop = static_cast<std::size_t>(rel) - 1;
        // compact lazily so the cost stays amortized O(1) per sample
        if (drop * 2 < count()) return;
        x_.erase(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(drop * dim_));
        dx_.erase(dx_.begin(), dx_.begin() + static_cast<std::ptrdiff_t>(drop * dim_));
        offset_ += drop;
        const auto keep = std::lower_bound(extra_t_.begin(), extra_t_.end(), t_begin());
        const auto gone = static_cast<std::size_t>(keep - extra_t_.begin());
        extra_t_.erase(extra_t_.begin(), keep);
        ex_.erase(ex_.begin(), ex_.begin() + static_cast<std::ptrdiff_t>(gone * dim_));
        edx_.erase(edx_.begin(), edx_.begin() + static_cast<std::ptrdiff_t>(gone * dim_));
    }

    /// Interpolated state at t; t must lie within [t_begin(), t_end()] up to rounding.
    void eval(double t, std::span<double> out) const {
        const std::size_t n = count();
        const double tol = 1e-9 * spacing_;
        if (n == 0 || t < t_begin() - tol || t > t_end() + tol) {
            throw Error(ErrorCode::DelayOutOfBounds,
                        "lookup at t = " + std::to_string(t) + " outside the recorded window [" +
                            std::to_string(n ? t_begin() : 0.0) + ", " + std::to_string(n ? t_end() : 0.0) + "]");
        }
        if (n == 1) {
            std::copy_n(x_.begin(), dim_, out.begin());
            return;
        }
        double s = (t - t_begin()) / spacing_;
        s = std::clamp(s, 0.0, static_cast<double>(n - 1));
        auto k = static_cast<std::size_t>(s);
        if (k >= n - 1) k = n - 2;
        // cell [t_k, t_k+1], narrowed to the extra knots around t if any
        double ta = t_begin() + static_cast<double>(k) * spacing_;
        double tb = ta + spacing_;
        const double* x0 = &x_[k * dim_];
        const double* x1 = x0 + dim_;
        const double* d0 = &dx_[k * dim_];
        const double* d1 = d0 + dim_;
        if (!extra_t_.empty()) {
            const auto it = std::upper_bound(extra_t_.begin(), extra_t_.end(), t);
            if (it != extra_t_.begin() && *(it - 1) > ta) {
                const auto j = static_cast<std::size_t>(it - 1 - extra_t_.begin());
                ta = extra_t_[j];
                x0 = &ex_[j * dim_];
                d0 = &edx_[j * dim_];
            }
            if (it != extra_t_.end() && *it < tb) {
                const auto j = static_cast<std::size_t>(it - extra_t_.begin());
                tb = extra_t_[j];
                x1 = &ex_[j * dim_];
                d1 = &edx_[j * dim_];
            }
        }
        const double len = tb - ta;
        const double u = std::clamp((t - ta) / len, 0.0, 1.0);
        const double u2 = u * u;
        const double u3 = u2 * u;
        const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        const double h10 = u3 - 2.0 * u2 + u;
        const double h01 = -2.0 * u3 + 3.0 * u2;
        const double h11 = u3 - u2;
        for (std::size_t i = 0; i < dim_; ++i) {
            out[i] = h00 * x0[i] + h01 * x1[i] + len * (h10 * d0[i] + h11 * d1[i]);
        }
    }

private:
    double t0_;
    double spacing_;
    std::size_t dim_;
    std::size_t offset_ = 0;
    std::vector<double> x_;
    std::vector<double> dx_;
    std::vector<double> extra_t_;
    std::vector<double> ex_;
    std::vector<double> edx_;
};

/// Builds a history record on [-h_max, 0] from samples on a uniform grid,
/// with derivatives from fourth-order finite differences (one-sided at the ends).
/// samples holds `points` consecutive vectors of length dim, oldest first.
inline HermiteRecord history_from_samples(double h_max, std::size_t points, std::size_t dim,
                                          std::span<const double> samples) {
    if (points < 5) throw Error(ErrorCode::InvalidScenario, "history grid needs at least 5 points");
    const double dt = h_max / static_cast<double>(points - 1);
    HermiteRecord rec(-h_max, dt, dim);
    std::vector<double> d(dim);
    auto at = [&](std::size_t k, std::size_t i) { return samples[k * dim + i]; };
    for (std::size_t k = 0; k < points; ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
            double v;
            if (k >= 2 && k + 2 < points) {
                v = (at(k - 2, i) - 8.0 * at(k - 1, i) + 8.0 * at(k + 1, i) - at(k + 2, i)) / (12.0 * dt);
            } else if (k < 2) {
                v = (-25.0 * at(k, i) + 48.0 * at(k + 1, i) - 36.0 * at(k + 2, i) + 16.0 * at(k + 3, i) -
                     3.0 * at(k + 4, i)) / (12.0 * dt);
            } else {
                v = (25.0 * at(k, i) - 48.0 * at(k - 1, i) + 36.0 * at(k - 2, i) - 16.0 * at(k - 3, i) +
                     3.0 * at(k - 4, i)) / (12.0 * dt);
            }
            d[i] = v;
        }
        rec.push(samples.subspan(k * dim, dim), d);
    }
    return rec;
}

struct DdeGrid {
    double dt = 1e-3;       ///< output / record spacing
    int substeps = 1;       ///< RK4 steps per output step
    double horizon = 1.0;
    double h_min = 0.0;
    double h_max = 0.0;
};

/// Fixed-step classical RK4 for x'(t) = f(t, x(t), x(t - h(t))), t in [0, T].
///
/// `history` covers [-h_max, 0]; the solution itself is recorded at every
/// output step with its derivative so that delayed values come from a cubic
/// Hermite interpolant. Requires h_min >= dt so that a delayed lookup never
/// touches the step in progress.
///
///   rhs(t, x, x_delayed, dxdt)
///   delay(t) -> h(t)
///   observe(step, t, x, dxdt)
///
/// Throws DelayOutOfBounds when h(t) leaves [h_min, h_max].
template <class Rhs, class Delay, class Observer>
void integrate_rk4(const HermiteRecord& history, std::span<const double> x0, Rhs&& rhs, Delay&& delay,
                   const DdeGrid& grid, Observer&& observe) {
    const std::size_t dim = history.dim();
    if (x0.size() != dim) throw Error(ErrorCode::InvalidScenario, "initial state has the wrong dimension");
    if (!(grid.dt > 0.0) || grid.substeps < 1 || !(grid.horizon >= grid.dt)) {
        throw Error(ErrorCode::InvalidScenario, "need dt > 0, substeps >= 1 and horizon >= dt");
    }
    if (!(grid.h_min >= grid.dt)) {
        throw Error(ErrorCode::InvalidScenario, "minimal delay must be at least one step");
    }
    const auto steps = static_cast<std::size_t>(std::llround(grid.horizon / grid.dt));
    const double h = grid.dt / grid.substeps;
    const double delay_tol = 1e-12 * (1.0 + grid.h_max);

    HermiteRecord solution(0.0, grid.dt, dim);
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> xd(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

    auto delayed = [&](double t) {
        const double lag = delay(t);
        if (!(lag >= grid.h_min - delay_tol && lag <= grid.h_max + delay_tol)) {
            throw Error(ErrorCode::DelayOutOfBounds, "h(" + std::to_string(t) + ") = " + std::to_string(lag) +
                                                         " outside [h_min, h_max]");
        }
        const double tau = t - lag;
        if (tau <= 0.0) history.eval(std::max(tau, -grid.h_max), xd);
        else solution.eval(tau, xd);
        return std::span<const double>(xd);
    };
    auto f = [&](double t, std::span<const double> state, std::span<double> out) {
        rhs(t, state, delayed(t), out);
    };

    // Breaking points: x' jumps at t = 0 where the history meets the solution.
    // A breaking point of level L carries a jump in derivative L + 1, and where
    // t - h(t) crosses it the solution jumps one derivative higher. RK4 steps
    // onto the crossings of levels 0 and 1 and the record gets a knot there;
    // a jump in the fourth derivative no longer limits the order.
    struct Break {
        double t;
        int level;
    };
    constexpr int kMaxSourceLevel = 2;
    std::vector<Break> sources{{0.0, 0}};
    auto crossings = [&](double t0, double t1) {
        std::vector<Break> out;
        const double lag0 = t0 - delay(t0), lag1 = t1 - delay(t1);
        const double min_gap = 1e-9 * (t1 - t0);
        for (const Break& src : sources) {
            const bool below0 = lag0 < src.t, below1 = lag1 < src.t;
            if (below0 == below1) continue;
            double lo = t0, hi = t1;
            for (int it = 0; it < 80 && hi - lo > 4e-16 * (1.0 + std::abs(hi)); ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((mid - delay(mid) < src.t) == below0) lo = mid;
                else hi = mid;
            }
            const double tc = 0.5 * (lo + hi);
            if (tc - t0 > min_gap && t1 - tc > min_gap) out.push_back({tc, src.level + 1});
        }
        std::sort(out.begin(), out.end(), [](const Break& x, const Break& y) { return x.t < y.t; });
        // coincident crossings collapse into one split
        std::vector<Break> merged;
        for (const Break& bp : out) {
            if (!merged.empty() && bp.t - merged.back().t <= min_gap) {
                merged.back().level = std::min(merged.back().level, bp.level);
            } else {
                merged.push_back(bp);
            }
        }
        return merged;
    };

    // one classical step from (t, x) with k1 = f(t, x) already in place
    auto rk4_step = [&](double t, double step) {
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * step * k1[i];
        f(t + 0.5 * step, tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + 0.5 * step * k2[i];
        f(t + 0.5 * step, tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = x[i] + step * k3[i];
        f(t + step, tmp, k4);
        for (std::size_t i = 0; i < dim; ++i) x[i] += step / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    };

    for (std::size_t step = 0;; ++step) {
        const double t_out = static_cast<double>(step) * grid.dt;
        f(t_out, x, k1);
        solution.push(x, k1);
        observe(step, t_out, std::span<const double>(x), std::span<const double>(k1));
        if (step == steps) break;
        solution.discard_before(t_out - grid.h_max - 2.0 * grid.dt);

        for (int sub = 0; sub < grid.substeps; ++sub) {
            const double t = t_out + sub * h;
            if (sub > 0) f(t, x, k1);
            double at = t;
            for (const Break& bp : crossings(t, t + h)) {
                rk4_step(at, bp.t - at);
                at = bp.t;
                f(at, x, k1);
                solution.push_breakpoint(at, x, k1);
                if (bp.level < kMaxSourceLevel) sources.push_back(bp);
            }
            rk4_step(at, t + h - at);
        }
        // a source can only be crossed again while it is inside the delay window
        std::erase_if(sources, [&](const Break& bp) { return bp.t < t_out - grid.h_max; });
        for (double v : x) {
            if (!std::isfinite(v) || std::abs(v) > 1e12) {
                throw Error(ErrorCode::NonFiniteState,
                            "state diverged (|x| > 1e12) at t = " + std::to_string(t_out + grid.dt));
            }
        }
    }
}

}  // namespace rdstab
