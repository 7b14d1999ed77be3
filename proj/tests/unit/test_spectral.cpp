#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rdstab/quadrature.hpp"
#include "rdstab/spectral.hpp"

using namespace rdstab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PlantParams symmetric_plant(double h) {
    PlantParams p;
    p.theta1 = p.theta2 = std::atan2(1.0, h);
    return p;
}

}  // namespace

TEST_CASE("characteristic function at simple points", "[spectral]") {
    const PlantParams p = symmetric_plant(1.0);
    CHECK_THAT(characteristic_fn(p, std::numbers::pi / 2), WithinAbs(1.0 - std::numbers::pi * std::numbers::pi / 4, 1e-12));
    CHECK(characteristic_fn(reference_plant(), 0.0) == 0.0);
    CHECK(characteristic_fn(p, 0.0) == 0.0);
}

TEST_CASE("characteristic derivative matches a central difference", "[spectral]") {
    const PlantParams p = reference_plant();
    for (double r : {0.3, 1.5, 4.0, 11.0}) {
        const double h = 1e-6;
        const double fd = (characteristic_fn(p, r + h) - characteristic_fn(p, r - h)) / (2 * h);
        CHECK_THAT(characteristic_derivative(p, r), WithinRel(fd, 1e-6));
    }
}

TEST_CASE("reference plant: first roots and eigenvalues", "[spectral]") {
    const PlantParams p = reference_plant();
    const auto roots = find_roots(p, 3);
    REQUIRE(roots.size() == 3);
    CHECK_THAT(roots[0], WithinAbs(1.4898, 1e-3));
    CHECK_THAT(roots[1], WithinAbs(3.9488, 1e-3));
    CHECK_THAT(roots[2], WithinAbs(6.7934, 1e-3));
    CHECK(std::abs(oracle::characteristic(p, roots[0])) <= 1e-9);

    const auto lambda = eigenvalues(p, 3);
    CHECK_THAT(lambda[0], WithinAbs(2.5561, 1e-3));
    CHECK_THAT(lambda[1], WithinAbs(-0.1186, 1e-3));
    CHECK_THAT(lambda[2], WithinAbs(-6.2299, 1e-3));
}

TEST_CASE("roots agree with a brute-force bracketing oracle", "[spectral]") {
    const PlantParams p = reference_plant();
    const auto roots = find_roots(p, 3);
    // independent: bisect every sign change of a step-1e-4 scan
    std::vector<double> brute;
    const double step = 1e-4;
    for (double r = step; brute.size() < 3; r += step) {
        double lo = r, hi = r + step;
        if ((oracle::characteristic(p, lo) < 0) == (oracle::characteristic(p, hi) < 0)) continue;
        for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
            const double mid = 0.5 * (lo + hi);
            if ((oracle::characteristic(p, mid) < 0) == (oracle::characteristic(p, lo) < 0)) lo = mid;
            else hi = mid;
        }
        brute.push_back(0.5 * (lo + hi));
    }
    for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(roots[i], WithinAbs(brute[i], 1e-11));
}

TEST_CASE("thirty roots: residual, ordering, asymptotic spacing", "[spectral]") {
    const PlantParams p = reference_plant();
    const Spectrum s = compute_spectrum(p, 30);
    REQUIRE(s.size() == 30);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = s[i].r;
        CHECK(std::abs(characteristic_fn(p, r)) <= 1e-12 * (1 + r * r));
        CHECK(s[i].n == static_cast<int>(i) + 1);
        CHECK(s[i].norm_phi > 0.0);
        // bit-consistent eigenvalue formula
        CHECK(s[i].lambda == p.b + p.c - p.a * r * r);
        if (i > 0) {
            CHECK(s[i].r > s[i - 1].r);
            CHECK(s[i].lambda < s[i - 1].lambda);
        }
    }
    CHECK_THAT(s[29].r - s[28].r, WithinAbs(std::numbers::pi, 5e-2));
}

TEST_CASE("equal Robin coefficients give simple roots", "[spectral]") {
    const PlantParams p = symmetric_plant(0.7);
    for (double r : find_roots(p, 10)) {
        CHECK(std::abs(characteristic_fn(p, r)) <= 1e-12 * (1 + r * r));
        CHECK(std::abs(characteristic_derivative(p, r)) > 1e-3);
    }
}

TEST_CASE("root completeness against sign-change count", "[spectral][property]") {
    std::mt19937_64 rng(20240601);
    for (int draw = 0; draw < 12; ++draw) {
        const PlantParams p = oracle::random_plant(rng);
        const double r_max = 40.0;
        const int expected = oracle::sign_changes(p, r_max);
        const auto roots = find_roots(p, expected + 2);
        const auto inside = std::count_if(roots.begin(), roots.end(), [&](double r) { return r <= r_max; });
        CHECK(inside == expected);
    }
}

TEST_CASE("eigenvalue identities", "[spectral]") {
    PlantParams p = reference_plant();
    CHECK(eigenvalue_from_root(p, 0.0) == p.b + p.c);
    const auto l1 = eigenvalues(p, 6);
    PlantParams q = p;
    q.a = 2 * p.a;
    const auto l2 = eigenvalues(q, 6);
    for (std::size_t i = 0; i < l1.size(); ++i) {
        CHECK_THAT(l2[i] - (q.b + q.c), WithinRel(2 * (l1[i] - (p.b + p.c)), 1e-14));
    }
}

TEST_CASE("eigenfunctions: boundary value, ODE and Robin residuals", "[spectral]") {
    const PlantParams p = reference_plant();
    const Spectrum s = compute_spectrum(p, 30);
    for (const auto& e : s.pairs()) {
        CHECK(eigenfunction_value(e, p, 0.0) == e.r / e.norm_phi);
        CHECK(eigenfunction_value(e, p, 0.0) > 0.0);
        const double scale = 1.0 + e.r * e.r;
        for (int k = 1; k <= 9; ++k) {
            const double x = 0.1 * k;
            const double lhs = p.a * eigenfunction_second_derivative(e, p, x) + (p.b + p.c) * eigenfunction_value(e, p, x);
            CHECK(std::abs(lhs - e.lambda * eigenfunction_value(e, p, x)) <= 1e-9 * scale);
        }
        const double left = std::cos(p.theta1) * eigenfunction_value(e, p, 0.0) -
                            std::sin(p.theta1) * eigenfunction_derivative(e, p, 0.0);
        const double right = std::cos(p.theta2) * eigenfunction_value(e, p, 1.0) +
                             std::sin(p.theta2) * eigenfunction_derivative(e, p, 1.0);
        CHECK(std::abs(left) <= 1e-9 * scale);
        CHECK(std::abs(right) <= 1e-9 * scale);
    }
}

TEST_CASE("eigenfunctions are orthonormal", "[spectral]") {
    const PlantParams p = reference_plant();
    const Spectrum s = compute_spectrum(p, 30);
    double off = 0.0, diag = 0.0;
    for (std::size_t n = 0; n < 30; ++n) {
        for (std::size_t m = n; m < 30; ++m) {
            const double ip = oracle::integrate(
                [&](double x) { return eigenfunction_value(s[n], p, x) * eigenfunction_value(s[m], p, x); });
            if (n == m) diag = std::max(diag, std::abs(ip - 1.0));
            else off = std::max(off, std::abs(ip));
        }
    }
    CHECK(diag <= 1e-9);
    CHECK(off <= 1e-9);
}

TEST_CASE("phi_norm closed form against quadrature", "[spectral][property]") {
    std::mt19937_64 rng(77);
    for (int draw = 0; draw < 100; ++draw) {
        const PlantParams p = oracle::random_plant(rng);
        const double r = oracle::uniform(rng, 0.05, 60.0);
        const double h1 = std::cos(p.theta1) / std::sin(p.theta1);
        const double q = oracle::integrate([&](double x) {
            const double phi = r * std::cos(r * x) + h1 * std::sin(r * x);
            return phi * phi;
        });
        CHECK_THAT(phi_norm(p, r) * phi_norm(p, r), WithinRel(q, 1e-10));
    }
}

TEST_CASE("phi_norm special cases", "[spectral]") {
    PlantParams neumann_left = reference_plant();
    neumann_left.theta1 = std::numbers::pi / 2;  // h1 = 0 up to rounding
    for (int n = 1; n <= 5; ++n) {
        const double r = n * std::numbers::pi;
        CHECK_THAT(phi_norm(neumann_left, r) * phi_norm(neumann_left, r), WithinRel(r * r / 2, 1e-12));
    }
    const PlantParams unit = symmetric_plant(1.0);
    const double tiny = phi_norm(unit, 1e-9);
    CHECK(std::isfinite(tiny));
    // r -> 0: ||phi||^2 -> 0 with h1 sin(rx) ~ r x, so ||phi||^2 / r^2 -> int (1 + x)^2 = 7/3
    CHECK_THAT(tiny * tiny / 1e-18, WithinRel(7.0 / 3.0, 1e-6));
}

TEST_CASE("projection onto the eigenbasis", "[spectral]") {
    const PlantParams p = reference_plant();
    const Spectrum s = compute_spectrum(p, 30);

    const auto unit = project([&](double x) { return eigenfunction_value(s[2], p, x); }, s, 30);
    for (std::size_t n = 0; n < 30; ++n) CHECK_THAT(unit[n], WithinAbs(n == 2 ? 1.0 : 0.0, 1e-9));

    const auto zero = project([](double) { return 0.0; }, s, 30);
    for (double v : zero) CHECK(v == 0.0);

    // <1 - x, phi_n> from antiderivatives
    const auto ramp = project([](double x) { return 1.0 - x; }, s, 30);
    const double h1 = p.h1();
    double partial = 0.0;
    for (std::size_t n = 0; n < 30; ++n) {
        const double r = s[n].r;
        const double exact = (r * (1 - std::cos(r)) / (r * r) + h1 * (1 / r - std::sin(r) / (r * r))) / s[n].norm_phi;
        CHECK_THAT(ramp[n], WithinAbs(exact, 1e-9));
        const double next = partial + ramp[n] * ramp[n];
        CHECK(next >= partial);
        partial = next;
    }
    CHECK(partial <= 1.0 / 3.0 + 1e-12);
}

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly", "[spectral][quadrature]") {
    const QuadratureRule g = gauss_legendre_reference(8);
    CHECK_THAT(g.integrate([](double x) { return std::pow(x, 14) + x * x * x; }), WithinAbs(2.0 / 15.0, 1e-14));
    const QuadratureRule c = composite_gauss_legendre(128);
    CHECK(c.size() == 128);
    CHECK_THAT(c.integrate([](double x) { return std::exp(x); }), WithinRel(std::exp(1.0) - 1.0, 1e-14));
}

TEST_CASE("parameter validation", "[spectral][errors]") {
    PlantParams p = reference_plant();
    p.theta1 = 2 * std::numbers::pi / 3;  // cot < 0
    CHECK_THROWS_MATCHES(find_roots(p, 3), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::BranchUnsupported;
                         }));
    p = reference_plant();
    p.a = 0.0;
    CHECK_THROWS_AS(find_roots(p, 3), Error);
    p = reference_plant();
    p.h_min = 4.0;
    CHECK_THROWS_AS(p.validate(), Error);

    RootScanOptions tight;
    tight.max_r = 5.0;
    CHECK_THROWS_MATCHES(find_roots(reference_plant(), 5, tight), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == ErrorCode::RootScanExhausted; }));
}
