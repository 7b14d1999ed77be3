#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "rdstab/control.hpp"
#include "rdstab/iss.hpp"
#include "rdstab/model.hpp"
#include "rdstab/sim.hpp"
#include "rdstab/spectral.hpp"

namespace rdstab {

using json = nlohmann::ordered_json;

/// Shortest round-trippable-enough decimal used in every CSV cell.
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline json to_json(const PlantParams& p) {
    return json{{"a", p.a},           {"b", p.b},         {"c", p.c},        {"theta1", p.theta1},
                {"theta2", p.theta2}, {"h_min", p.h_min}, {"h_max", p.h_max}};
}

inline json to_json(const Spectrum& s) {
    json pairs = json::array();
    for (const auto& e : s.pairs()) {
        pairs.push_back({{"n", e.n}, {"r", e.r}, {"lambda", e.lambda}, {"norm_phi", e.norm_phi}});
    }
    return json{{"params", to_json(s.params())}, {"pairs", std::move(pairs)}};
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json poles_to_json(const std::vector<Pole>& mu) {
    json out = json::array();
    for (const auto& m : mu) {
        if (m.imag() == 0.0) out.push_back(m.real());
        else out.push_back(json::array({m.real(), m.imag()}));
    }
    return out;
}

inline json to_json(const TruncatedModel& m) {
    json diag = json::array();
    for (int n = 0; n < m.N0; ++n) diag.push_back(m.A(n, n));
    return json{{"N0", m.N0},
                {"A", std::move(diag)},
                {"B", matrix_to_json(m.B)},
                {"lambda_next", m.next_lambda},
                {"actuation", std::string(to_string(m.actuation))}};
}

/// Certificate report: N0, mu, K, alpha, beta, sigma, kappa, delta, eta.
inline json to_json(const ControllerDesign& d) {
    return json{{"N0", d.N0},       {"mu", poles_to_json(d.mu)}, {"K", matrix_to_json(d.K)},
                {"alpha", d.alpha}, {"beta", d.beta},            {"sigma", d.sigma},
                {"kappa", d.kappa}, {"delta", d.delta},          {"eta", d.eta},
                {"actuation", std::string(to_string(d.actuation))}};
}

inline json to_json(const IssFit& f) {
    return json{{"kappa_fit", f.kappa_fit},   {"C0_fit", f.C0_fit},
                {"C1_fit", f.C1_fit},         {"residual", f.residual},
                {"input_residual", f.input_residual}, {"gain_norm", f.gain_norm}};
}

/// CSV with header t,h,u1,u2,norm,x1,...,xN; one row every `stride` steps.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::size_t stride = 1) {
    if (stride == 0) stride = 1;
    os << "t,h,u1,u2,norm";
    for (int n = 1; n <= traj.modes; ++n) os << ",x" << n;
    os << '\n';
    for (std::size_t k = 0; k < traj.steps(); k += stride) {
        os << format_number(traj.times[k]) << ',' << format_number(traj.delay_trace[k]) << ','
           << format_number(traj.inputs[k][0]) << ',' << format_number(traj.inputs[k][1]) << ','
           << format_number(traj.state_norm[k]);
        for (double v : traj.state(k)) os << ',' << format_number(v);
        os << '\n';
    }
}

/// Long-format CSV t,x,y.
inline void write_field_csv(std::ostream& os, const FieldSamples& field) {
    os << "t,x,y\n";
    const std::size_t nx = field.xs.size();
    for (std::size_t i = 0; i < field.times.size(); ++i) {
        for (std::size_t j = 0; j < nx; ++j) {
            os << format_number(field.times[i]) << ',' << format_number(field.xs[j]) << ','
               << format_number(field.values[i * nx + j]) << '\n';
        }
    }
}

}  // namespace rdstab
