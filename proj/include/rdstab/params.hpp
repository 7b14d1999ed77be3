#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "rdstab/error.hpp"

namespace rdstab {

/// Coefficients of y_t = a y_xx + b y + c y(t - h(t)) + d on (0,1) with
/// Robin boundary operators
///   cos(theta1) y(0) - sin(theta1) y_x(0) = u1,
///   cos(theta2) y(1) + sin(theta2) y_x(1) = u2,
/// and delay bounds h_min <= h(t) <= h_max.
struct PlantParams {
    double a = 0.2;
    double b = 2.0;
    double c = 1.0;
    double theta1 = std::numbers::pi / 3.0;
    double theta2 = std::numbers::pi / 10.0;
    double h_min = 0.5;
    double h_max = 3.5;

    /// cot(theta1)
    [[nodiscard]] double h1() const { return std::cos(theta1) / std::sin(theta1); }
    /// cot(theta2)
    [[nodiscard]] double h2() const { return std::cos(theta2) / std::sin(theta2); }

    /// Throws InvalidParams / BranchUnsupported.
    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!(finite(a) && finite(b) && finite(c) && finite(theta1) && finite(theta2) &&
              finite(h_min) && finite(h_max))) {
            throw Error(ErrorCode::InvalidParams, "plant parameters must be finite");
        }
        if (!(a > 0.0)) {
            throw Error(ErrorCode::InvalidParams, "diffusivity a must be > 0");
        }
        if (!(h_min > 0.0 && h_min < h_max)) {
            throw Error(ErrorCode::InvalidParams, "delay bounds must satisfy 0 < h_min < h_max");
        }
        constexpr double two_pi = 2.0 * std::numbers::pi;
        if (theta1 < 0.0 || theta1 >= two_pi || theta2 < 0.0 || theta2 >= two_pi) {
            throw Error(ErrorCode::InvalidParams, "Robin angles must lie in [0, 2*pi)");
        }
        // sin(theta) == 0 leaves cot undefined; treat it with the cot <= 0 case.
        for (double theta : {theta1, theta2}) {
            const double s = std::sin(theta);
            if (std::abs(s) < 1e-14 || !(std::cos(theta) / s > 0.0)) {
                throw Error(ErrorCode::BranchUnsupported,
                            "only Robin angles with cot(theta) > 0 are supported (theta = " +
                                std::to_string(theta) + ")");
            }
        }
    }
};

/// Parameters used in the reference numerical study.
inline PlantParams reference_plant() { return PlantParams{}; }

}  // namespace rdstab
