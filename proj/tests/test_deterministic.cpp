#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "spotforward/closed_forms.hpp"
#include "spotforward/deterministic.hpp"

using namespace spotforward;

TEST_CASE("closed forms at pinned reference points") {
    // c = rho = T = 1: P(0) = 1/(2e - 1)
    CHECK(p_closed(0.0, 1.0, 1.0, 1.0) == doctest::Approx(0.2253996735605641).epsilon(1e-14));
    CHECK(p_closed(1.0, 1.0, 1.0, 1.0) == 1.0);
    CHECK(delta_closed(0.0, 1.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(0.5492006528788719).epsilon(1e-14));
    CHECK(delta_closed(1.0, 1.0, 1.0, 1.0, 1.0) == 0.0);
    CHECK(beta_closed(1.0, 1.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(0.22539967356056412).epsilon(1e-14));
    CHECK(beta_closed(0.0, 1.0, 1.0, 1.0, 1.0) == 0.0);
}

TEST_CASE("closed forms reject out-of-range times") {
    CHECK_THROWS_AS(p_closed(-0.1, 1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(p_closed(1.1, 1.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(p_closed(0.5, -1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("backward solver matches the closed forms across the rate range") {
    for (const double c : {0.02, 1.0, 5.0}) {
        for (const double rho : {0.5, 1.0, 1000.0}) {
            for (const double T : {0.25, 1.0}) {
                const TimeGrid grid = TimeGrid::uniform(T, 2048);
                const CostCurve curve = CostCurve::constant(c);
                const auto P = solve_riccati_backward(curve, rho, grid);
                const auto delta = solve_delta_backward(curve, P, 1.0, rho, grid);
                double errP = 0.0, errD = 0.0;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    const double t = grid.knots[i];
                    errP = std::fmax(errP, std::fabs(P[i] - p_closed(t, c, rho, T)));
                    errD = std::fmax(errD,
                                     std::fabs(delta[i] - delta_closed(t, c, 1.0, rho, T)));
                }
                CAPTURE(c);
                CAPTURE(rho);
                CAPTURE(T);
                CHECK(errP <= 1e-10);
                CHECK(errD <= 1e-10);
            }
        }
    }
}

TEST_CASE("backward solver matches a raw-equation RK4 oracle at moderate rates") {
    const double c = 1.0, rho = 2.0, T = 1.0, m = 0.7;
    const TimeGrid grid = TimeGrid::uniform(T, 1024);
    const CostCurve curve = CostCurve::constant(c);
    const auto P = solve_riccati_backward(curve, rho, grid);
    const auto delta = solve_delta_backward(curve, P, m, rho, grid);
    std::vector<double> P_rk, d_rk;
    oracles::rk4_backward_pd([&](double) { return c; }, rho, m, grid, P_rk, d_rk);
    CHECK(oracles::sup_diff(P, P_rk) <= 1e-9);
    CHECK(oracles::sup_diff(delta, d_rk) <= 1e-9);
}

TEST_CASE("piecewise-constant cost solved by analytic gluing") {
    // cost c1 on [0, T/2), c2 on [T/2, T]: on the right segment P is the
    // c2 closed form; on the left segment 1/P solves the linear equation
    // with constant forcing rho/c1 and terminal value 1/P(T/2).
    const double c1 = 0.4, c2 = 1.7, rho = 3.0, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 2048);
    const CostCurve curve = CostCurve::piecewise({T / 2}, {c1, c2});
    const auto P = solve_riccati_backward(curve, rho, grid);
    double err = 0.0;
    const double u_mid = 1.0 / p_closed(T / 2, c2, rho, T);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.knots[i];
        double expected;
        if (t >= T / 2) {
            expected = p_closed(t, c2, rho, T);
        } else {
            const double g = std::exp(T / 2 - t);
            expected = 1.0 / (u_mid * g + rho / c1 * (g - 1.0));
        }
        err = std::fmax(err, std::fabs(P[i] - expected));
    }
    CHECK(err <= 1e-10);
}

TEST_CASE("cost curve evaluation is side-aware at step breaks") {
    const CostCurve curve = CostCurve::piecewise({0.5}, {1.0, 2.0});
    CHECK(curve(0.5, CostCurve::Side::Left) == 1.0);
    CHECK(curve(0.5, CostCurve::Side::Right) == 2.0);
    CHECK(curve(0.25) == 1.0);
    CHECK(curve(0.75) == 2.0);
    CHECK_THROWS_AS(CostCurve::piecewise({0.7, 0.3}, {1.0, 2.0, 3.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(CostCurve::piecewise({0.5}, {1.0, -2.0}), std::invalid_argument);

    const TimeGrid g = TimeGrid::uniform(1.0, 4);
    const CostCurve sampled = CostCurve::sampled(g, {1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK(sampled(0.375) == doctest::Approx(2.5));
}

TEST_CASE("solve_delta_backward rejects an inconsistent P path") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 64);
    const CostCurve curve = CostCurve::constant(1.0);
    auto P = solve_riccati_backward(curve, 1.0, grid);
    P[10] += 1e-3;
    CHECK_THROWS_AS(solve_delta_backward(curve, P, 1.0, 1.0, grid), std::invalid_argument);
}

TEST_CASE("assembled paths satisfy the structural identities") {
    std::mt19937_64 rng(20240811u);
    std::uniform_real_distribution<double> uT(0.25, 2.0), um(0.0, 2.0), us(-1.0, 1.0),
        ulog(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
        const double c = 0.02 * std::pow(5.0 / 0.02, ulog(rng));
        const double rho = 0.5 * std::pow(1000.0 / 0.5, ulog(rng));
        const double T = uT(rng), m = um(rng), s = us(rng);
        const TimeGrid grid = TimeGrid::uniform(T, 512);
        const CostCurve curve = CostCurve::constant(c);
        const auto P = solve_riccati_backward(curve, rho, grid);
        const auto delta = solve_delta_backward(curve, P, m, rho, grid);
        const auto paths = assemble_paths(P, delta, s, curve, m, rho, grid);
        CAPTURE(c);
        CAPTURE(rho);
        CAPTURE(T);

        CHECK(paths.P.back() == 1.0);
        CHECK(paths.delta.back() == 0.0);
        CHECK(paths.H.front() == 0.0);
        CHECK(paths.Q.front() == 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(paths.P[i] > 0.0);
            CHECK(paths.P[i] <= 1.0 + 1e-14);
            CHECK(paths.Lambda[i] ==
                  doctest::Approx(paths.P[i] * s + paths.delta[i] / rho).epsilon(1e-12));
            CHECK(paths.q_tilde[i] == doctest::Approx(m - paths.q[i]).epsilon(1e-12));
            CHECK(paths.mu[i] == doctest::Approx(c * paths.q_tilde[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("cumulative rate H matches direct quadrature at moderate rates") {
    const double c = 0.8, rho = 4.0, T = 1.5, m = 0.3;
    const TimeGrid grid = TimeGrid::uniform(T, 2048);
    const CostCurve curve = CostCurve::constant(c);
    const auto P = solve_riccati_backward(curve, rho, grid);
    const auto delta = solve_delta_backward(curve, P, m, rho, grid);
    const auto paths = assemble_paths(P, delta, 0.5, curve, m, rho, grid);
    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        integrand[i] = rho * P[i] / c + 1.0;
    CHECK(paths.H.back() ==
          doctest::Approx(oracles::trapz_richardson(integrand, grid.dt())).epsilon(1e-10));
}

TEST_CASE("retail purchases match a direct RK4 oracle at moderate rates") {
    const double c = 1.2, rho = 3.0, T = 1.0, m = 0.5, s = 0.4;
    const TimeGrid grid = TimeGrid::uniform(T, 1024);
    const CostCurve curve = CostCurve::constant(c);
    const auto P = solve_riccati_backward(curve, rho, grid);
    const auto delta = solve_delta_backward(curve, P, m, rho, grid);
    const auto paths = assemble_paths(P, delta, s, curve, m, rho, grid);
    const double QT = oracles::rk4_forward_on_knots(
        [&](std::size_t i, double q) {
            return rho * (paths.Lambda[i] - paths.P[i] * q) / c;
        },
        0.0, grid, grid.size() - 1);
    CHECK(paths.Q.back() == doctest::Approx(QT).epsilon(1e-9));
}

TEST_CASE("terminal hedge mass agrees with a pathwise integration") {
    const double c = 1.0, rho = 1.0, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 1024);
    const CostCurve curve = CostCurve::constant(c);
    const auto P = solve_riccati_backward(curve, rho, grid);
    const double a = alpha_T(P, curve, rho, grid);
    // alpha' = P (1 - rho*alpha) / c, alpha(0) = 0
    const double a_rk = oracles::rk4_forward(
        [&](double t, double y) { return p_closed(t, c, rho, T) * (1.0 - rho * y) / c; },
        0.0, 0.0, T, 1024);
    CHECK(a == doctest::Approx(a_rk).epsilon(1e-10));
    // pinned value: 1 - rho*alpha(T) = e^T P(0) = e/(2e - 1)
    CHECK(1.0 - rho * a == doctest::Approx(0.6126998367802821).epsilon(1e-13));
}

TEST_CASE("terminal supply loading matches the pathwise equation") {
    const double c = 1.0, rho = 1.0, T = 1.0, m = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 1024);
    // beta' = (delta - rho*P*beta)/c from beta(0) = 0 reaches the closed form
    const double bT = oracles::rk4_forward(
        [&](double t, double y) {
            return (delta_closed(t, c, m, rho, T) - rho * p_closed(t, c, rho, T) * y) / c;
        },
        0.0, 0.0, T, 1024);
    CHECK(bT == doctest::Approx(beta_closed(T, c, m, rho, T)).epsilon(1e-10));
    (void)grid;
}

TEST_CASE("large-penalty limits") {
    const double c = 1.0, m = 1.0, T = 1.0;
    const LargeRhoLimits lim = large_rho_asymptotics(c, m, T);
    const double em = -std::expm1(-T); // 1 - e^{-T}
    CHECK(lim.rho_eT_P0 == doctest::Approx(c / em).epsilon(1e-14));
    CHECK(lim.rho_eT_P0 == doctest::Approx(1.5819767068693265).epsilon(1e-14));
    CHECK(lim.rho_beta_T == doctest::Approx(c * m * (T - em) / em).epsilon(1e-14));
    CHECK(lim.delta0 == doctest::Approx(c * m * (em - T * std::exp(-T)) / em).epsilon(1e-14));

    // the solved quantities approach the limits as rho grows
    const double rho = 1e6;
    const TimeGrid grid = TimeGrid::uniform(T, 4096);
    const CostCurve curve = CostCurve::constant(c);
    const auto P = solve_riccati_backward(curve, rho, grid);
    CHECK(rho * std::exp(T) * P[0] == doctest::Approx(lim.rho_eT_P0).epsilon(1e-5));
}
