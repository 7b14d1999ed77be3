#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "rdstab/error.hpp"
#include "rdstab/spectral.hpp"

namespace rdstab {

enum class Actuation { Both, LeftOnly, RightOnly };

constexpr std::string_view to_string(Actuation a) {
    switch (a) {
        case Actuation::Both: return "both";
        case Actuation::LeftOnly: return "left";
        case Actuation::RightOnly: return "right";
    }
    return "both";
}

inline Actuation parse_actuation(std::string_view s) {
    if (s == "both") return Actuation::Both;
    if (s == "left") return Actuation::LeftOnly;
    if (s == "right") return Actuation::RightOnly;
    throw Error(ErrorCode::ConfigError, "actuation must be one of both|left|right, got '" + std::string(s) + "'");
}

/// Finite-dimensional delayed model  Y' = A Y + c (Y(t-h) - Y) + B u + D.
/// B always carries both boundary columns; single-input operation is
/// realized by zeroing a row of the feedback gain.
struct TruncatedModel {
    int N0 = 0;
    Eigen::MatrixXd A;  ///< N0 x N0, diag(lambda_1..lambda_N0)
    Eigen::MatrixXd B;  ///< N0 x 2, entries b_{n,m}
    std::shared_ptr<const Spectrum> spectrum;
    Actuation actuation = Actuation::Both;
    double next_lambda = 0.0;  ///< lambda_{N0+1}, needed by the residual-dynamics certificate

    [[nodiscard]] const PlantParams& params() const { return spectrum->params(); }
};

namespace detail {
inline std::shared_ptr<const Spectrum> spectrum_with_at_least(const Spectrum& s, std::size_t count) {
    if (s.size() >= count) return std::make_shared<const Spectrum>(s);
    return std::make_shared<const Spectrum>(compute_spectrum(s.params(), static_cast<int>(count)));
}
}  // namespace detail

/// Smallest N0 >= 1 with lambda_{N0+1} < -2 sqrt(5) |c|. The spectrum is
/// extended internally when it does not reach far enough.
inline int select_mode_count(const Spectrum& spectrum, double c, int mode_cap = 4096) {
    const double threshold = -2.0 * std::sqrt(5.0) * std::abs(c);
    auto current = std::make_shared<const Spectrum>(spectrum);
    for (int n0 = 1; n0 <= mode_cap; ++n0) {
        if (current->size() < static_cast<std::size_t>(n0) + 1) {
            current = detail::spectrum_with_at_least(*current, std::max<std::size_t>(2 * current->size(), n0 + 1));
        }
        if ((*current)[static_cast<std::size_t>(n0)].lambda < threshold) return n0;
    }
    throw Error(ErrorCode::ConstraintViolated, "no admissible mode count below the cap " + std::to_string(mode_cap));
}

/// b_{n,m} through the lifting operator with exponent k:
///   b_{n,1} = a (e_n'(0) + k e_n(0)) / (cos t1 + k sin t1)
///   b_{n,2} = a (-e_n'(1) + k e_n(1)) / (cos t2 + k sin t2)
/// Throws LiftingDegenerate when the denominator vanishes.
inline double input_coefficient(const EigenPair& pair, const PlantParams& p, int boundary, int k) {
    if (boundary != 1 && boundary != 2) throw Error(ErrorCode::InvalidParams, "boundary index must be 1 or 2");
    if (k < 2) throw Error(ErrorCode::InvalidParams, "lifting exponent k must be >= 2");
    const double theta = boundary == 1 ? p.theta1 : p.theta2;
    const double kd = static_cast<double>(k);
    const double denom = std::cos(theta) + kd * std::sin(theta);
    if (std::abs(denom) < 1e-12 * (1.0 + kd)) {
        throw Error(ErrorCode::LiftingDegenerate,
                    "cos(theta) + k sin(theta) = 0 for k = " + std::to_string(k) + ", boundary " +
                        std::to_string(boundary));
    }
    if (boundary == 1) {
        return p.a * (eigenfunction_derivative(pair, p, 0.0) + kd * eigenfunction_value(pair, p, 0.0)) / denom;
    }
    return p.a * (-eigenfunction_derivative(pair, p, 1.0) + kd * eigenfunction_value(pair, p, 1.0)) / denom;
}

/// b_{n,m} with k = 2, bumped past degenerate values.
inline double input_coefficient(const EigenPair& pair, const PlantParams& p, int boundary) {
    for (int k = 2; k < 64; ++k) {
        try {
            return input_coefficient(pair, p, boundary, k);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::LiftingDegenerate) throw;
        }
    }
    throw Error(ErrorCode::LiftingDegenerate, "no admissible lifting exponent found");
}

/// count x 2 matrix of b_{n,m} over the first `count` modes.
inline Eigen::MatrixXd input_matrix(const Spectrum& spectrum, std::size_t count) {
    if (count > spectrum.size()) throw Error(ErrorCode::InvalidParams, "input_matrix: not enough modes");
    Eigen::MatrixXd B(static_cast<Eigen::Index>(count), 2);
    for (std::size_t n = 0; n < count; ++n) {
        const auto i = static_cast<Eigen::Index>(n);
        B(i, 0) = input_coefficient(spectrum[n], spectrum.params(), 1);
        B(i, 1) = input_coefficient(spectrum[n], spectrum.params(), 2);
    }
    return B;
}

inline TruncatedModel build_model(const Spectrum& spectrum, int N0, Actuation actuation = Actuation::Both) {
    if (N0 < 1) throw Error(ErrorCode::InvalidParams, "N0 must be >= 1");
    if (static_cast<std::size_t>(N0) > spectrum.size()) {
        throw Error(ErrorCode::InvalidParams, "N0 exceeds the number of available eigenpairs");
    }
    TruncatedModel model;
    model.N0 = N0;
    model.actuation = actuation;
    model.spectrum = detail::spectrum_with_at_least(spectrum, static_cast<std::size_t>(N0) + 1);
    model.A = Eigen::MatrixXd::Zero(N0, N0);
    for (int n = 0; n < N0; ++n) model.A(n, n) = (*model.spectrum)[static_cast<std::size_t>(n)].lambda;
    model.B = input_matrix(*model.spectrum, static_cast<std::size_t>(N0));
    model.next_lambda = (*model.spectrum)[static_cast<std::size_t>(N0)].lambda;
    return model;
}

}  // namespace rdstab
