#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rdstab {

/// Nodes and weights of a quadrature rule on [0, 1].
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return nodes.size(); }

    template <class F>
    [[nodiscard]] double integrate(F&& f) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
        return sum;
    }
};

/// Gauss-Legendre rule with `order` points on [-1, 1] (Newton on P_order).
inline QuadratureRule gauss_legendre_reference(std::size_t order) {
    QuadratureRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const auto n = static_cast<double>(order);
    for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const auto kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

/// Composite Gauss-Legendre rule on [0, 1]: `total_nodes` split into equal
/// panels of `per_panel` points. total_nodes must be a multiple of per_panel.
inline QuadratureRule composite_gauss_legendre(std::size_t total_nodes, std::size_t per_panel = 16) {
    if (total_nodes == 0 || per_panel == 0 || total_nodes % per_panel != 0) {
        throw std::invalid_argument("composite_gauss_legendre: total_nodes must be a positive multiple of per_panel");
    }
    const QuadratureRule ref = gauss_legendre_reference(per_panel);
    const std::size_t panels = total_nodes / per_panel;
    const double width = 1.0 / static_cast<double>(panels);
    QuadratureRule rule;
    rule.nodes.reserve(total_nodes);
    rule.weights.reserve(total_nodes);
    for (std::size_t p = 0; p < panels; ++p) {
        const double left = static_cast<double>(p) * width;
        for (std::size_t i = 0; i < per_panel; ++i) {
            rule.nodes.push_back(left + 0.5 * width * (ref.nodes[i] + 1.0));
            rule.weights.push_back(0.5 * width * ref.weights[i]);
        }
    }
    return rule;
}

}  // namespace rdstab
