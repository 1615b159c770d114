#include <doctest.h>

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "spotforward/closed_forms.hpp"
#include "spotforward/jump.hpp"

using namespace spotforward;

TEST_CASE("zero intensity collapses to the constant-cost solution") {
    const double c_n = 0.04, c_s = 0.3, m = 0.5, rho = 50.0, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 1024);
    const auto [P, delta] = normal_coefficients(c_n, c_s, 0.0, m, rho, grid);
    double errP = 0.0, errD = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.knots[i];
        errP = std::fmax(errP, std::fabs(P[i] - p_closed(t, c_n, rho, T)));
        errD = std::fmax(errD, std::fabs(delta[i] - delta_closed(t, c_n, m, rho, T)));
    }
    CHECK(errP <= 1e-10);
    CHECK(errD <= 1e-10);
}

TEST_CASE("large intensity pins the normal state to the stressed one") {
    const double c_n = 0.2, c_s = 0.4, m = 0.5, rho = 5.0, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 1024);
    const double P_bar0 = p_closed(0.0, c_s, rho, T);
    auto gap = [&](double lambda) {
        const auto [P, delta] = normal_coefficients(c_n, c_s, lambda, m, rho, grid);
        (void)delta;
        return std::fabs(P[0] - P_bar0) / P_bar0;
    };
    const double g10 = gap(10.0), g50 = gap(50.0);
    CHECK(g50 < g10);
    CHECK(g50 <= 0.05);
}

TEST_CASE("normal-state coefficients match a raw-equation RK4 oracle") {
    // P' = rho*P^2/c + (1+lambda)*P - lambda*P_stress(t), P(T) = 1
    const double c_n = 0.2, c_s = 0.5, lambda = 1.3, m = 0.8, rho = 5.0, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 2048);
    const auto [P, delta] = normal_coefficients(c_n, c_s, lambda, m, rho, grid);
    const double P0_rk = oracles::rk4_forward(
        [&](double t, double y) {
            return rho * y * y / c_n + (1.0 + lambda) * y -
                   lambda * p_closed(t, c_s, rho, T);
        },
        1.0, T, 0.0, 4096);
    CHECK(P[0] == doctest::Approx(P0_rk).epsilon(1e-9));

    // delta by variation of constants on the realized linear equation:
    // delta(0) = integral_0^T exp(-A(s)) * (lambda*delta_stress + c*m) ds
    // with A the cumulative of rho*P/c + 1 + lambda
    std::vector<double> a(grid.size()), gsrc(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        a[i] = rho * P[i] / c_n + 1.0 + lambda;
        gsrc[i] = lambda * delta_closed(grid.knots[i], c_s, m, rho, T) + c_n * m;
    }
    const std::vector<double> A = oracles::trapz_cumulative(a, grid.dt());
    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        integrand[i] = std::exp(-A[i]) * gsrc[i];
    const double d0_vc = oracles::trapz_richardson(integrand, grid.dt());
    CHECK(delta[0] == doctest::Approx(d0_vc).epsilon(1e-6));
}

TEST_CASE("pinned regression values at a stiff penalty rate") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 4096);
    const auto [P, delta] = normal_coefficients(0.02, 0.1, 2.0, 1.0, 1000.0, grid);
    CHECK(P[0] == doctest::Approx(3.3343670097926816e-05).epsilon(1e-9));
    CHECK(delta[0] == doctest::Approx(0.017600643675674287).epsilon(1e-9));
}

TEST_CASE("normal-state coefficients sit between the two constant-cost solutions") {
    std::mt19937_64 rng(77001u);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int rep = 0; rep < 15; ++rep) {
        const double c_n = 0.02 + (0.5 - 0.02) * u01(rng);
        const double ratio = 1.0 + 9.0 * u01(rng);
        const double c_s = c_n * ratio;
        const double lambda = 3.0 * u01(rng);
        const double rho = std::pow(10.0, 3.0 * u01(rng));
        const double T = 0.5 + 0.75 * u01(rng);
        const double m = u01(rng);
        const TimeGrid grid = TimeGrid::uniform(T, 512);
        const auto [P, delta] = normal_coefficients(c_n, c_s, lambda, m, rho, grid);
        (void)delta;
        CAPTURE(c_n);
        CAPTURE(c_s);
        CAPTURE(lambda);
        CAPTURE(rho);
        bool ok = true;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid.knots[i];
            const double lo = p_closed(t, c_n, rho, T);
            const double hi = p_closed(t, c_s, rho, T);
            if (!(P[i] > 0.0) || P[i] < lo * (1.0 - 1e-9) || P[i] > hi * (1.0 + 1e-9)) {
                ok = false;
                break;
            }
        }
        CHECK(ok);
        CHECK(P.back() == 1.0);
    }
}

TEST_CASE("conditional paths splice the two regimes") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 512);
    const JumpCoefficients jc = solve_jump_model(0.1, 0.3, 1.0, 0.5, 10.0, grid);

    const ConditionalPath none = conditional_path(jc, std::nullopt);
    CHECK(none.realized_cost.front() == 0.1);
    CHECK(none.realized_cost.back() == 0.1);
    CHECK(none.realized_P == jc.P_normal);
    CHECK(none.realized_H.front() == 0.0);

    const ConditionalPath at0 = conditional_path(jc, 0.0);
    CHECK(at0.realized_cost.front() == 0.3);
    CHECK(at0.realized_P == jc.P_stress);

    const double u = grid.knots[256];
    const ConditionalPath mid = conditional_path(jc, u);
    CHECK(mid.realized_cost[255] == 0.1);
    CHECK(mid.realized_cost[256] == 0.3);
    CHECK(mid.realized_P[255] == jc.P_normal[255]);
    CHECK(mid.realized_P[257] == jc.P_stress[257]);
    // the cumulative rate is continuous across the event
    CHECK(mid.realized_H[256] ==
          doctest::Approx(none.realized_H[256]).epsilon(1e-9));

    CHECK_THROWS_AS(conditional_path(jc, 2.0), std::invalid_argument);
}

TEST_CASE("conditional terminal loadings match a two-segment pathwise RK4") {
    const double c_n = 0.15, c_s = 0.45, lambda = 0.8, m = 0.6, rho = 8.0, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 2048);
    const JumpCoefficients jc = solve_jump_model(c_n, c_s, lambda, m, rho, grid);

    for (const std::size_t iu : {std::size_t(512), std::size_t(1024), std::size_t(1536)}) {
        const double u = grid.knots[iu];
        // pre-event segment on knots (double-width RK4 steps need no
        // interpolation), post-event segment on the stressed closed forms
        const double beta_pre = oracles::rk4_forward_on_knots(
            [&](std::size_t i, double y) {
                return (jc.delta_normal[i] - rho * jc.P_normal[i] * y) / c_n;
            },
            0.0, grid, iu);
        const double beta_T = oracles::rk4_forward(
            [&](double t, double y) {
                return (delta_closed(t, c_s, m, rho, T) -
                        rho * p_closed(t, c_s, rho, T) * y) /
                       c_s;
            },
            beta_pre, u, T, 2048);
        const double got = conditional_beta(conditional_path(jc, u), jc);
        CAPTURE(u);
        CHECK(got == doctest::Approx(beta_T).epsilon(1e-8));
    }

    // no-event scenario: the pathwise equation runs on the normal state
    const double beta_none = oracles::rk4_forward_on_knots(
        [&](std::size_t i, double y) {
            return (jc.delta_normal[i] - rho * jc.P_normal[i] * y) / c_n;
        },
        0.0, grid, grid.size() - 1);
    CHECK(conditional_beta(conditional_path(jc, std::nullopt), jc) ==
          doctest::Approx(beta_none).epsilon(1e-8));
}

TEST_CASE("conditional hedge mass agrees with the realized cumulative rate") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 1024);
    const JumpCoefficients jc = solve_jump_model(0.1, 0.25, 1.5, 0.4, 20.0, grid);
    for (const double u : {0.0, 0.25, 0.5, 0.9}) {
        const ConditionalPath path = conditional_path(jc, u);
        const double via_H =
            (1.0 - std::exp(grid.horizon() - path.realized_H.back())) / jc.rho;
        CHECK(conditional_alpha(path, jc) == doctest::Approx(via_H).epsilon(1e-12));
    }
}

TEST_CASE("event-time expectation satisfies the terminal hedge identity") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 4096);
    const JumpCoefficients jc = solve_jump_model(0.02, 0.15, 0.67, 0.1333, 1000.0, grid);
    const double Ea = expected_alpha(jc);
    const double residual = 1.0 - jc.rho * Ea - std::exp(1.0) * jc.P_normal[0];
    CHECK(std::fabs(residual) <= 1e-8);
}

TEST_CASE("event-time expectation edge cases") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 512);
    const JumpCoefficients jc0 = solve_jump_model(0.1, 0.3, 0.0, 0.5, 10.0, grid);
    // no events: the expectation is the no-event scenario value itself
    CHECK(expected_beta(jc0) ==
          conditional_beta(conditional_path(jc0, std::nullopt), jc0));

    const JumpCoefficients jc_eps = solve_jump_model(0.1, 0.3, 1e-12, 0.5, 10.0, grid);
    CHECK(expected_beta(jc_eps) == doctest::Approx(expected_beta(jc0)).epsilon(1e-9));

    const TimeGrid odd = TimeGrid::uniform(1.0, 511);
    const JumpCoefficients jc_odd = solve_jump_model(0.1, 0.3, 1.0, 0.5, 10.0, odd);
    CHECK_THROWS_AS(expected_beta(jc_odd), std::invalid_argument);
}

TEST_CASE("expected beta against direct quadrature of the conditional values") {
    const double c_n = 0.2, c_s = 0.5, lambda = 1.1, m = 0.7, rho = 6.0, T = 1.0;
    const TimeGrid grid = TimeGrid::uniform(T, 2048);
    const JumpCoefficients jc = solve_jump_model(c_n, c_s, lambda, m, rho, grid);
    // Richardson-extrapolated trapezoid over the event density; at this
    // benign penalty rate the integrand has no boundary layer to resolve
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double u = grid.knots[i];
        f[i] = lambda * std::exp(-lambda * u) *
               conditional_beta(conditional_path(jc, u), jc);
    }
    const double atom = std::exp(-lambda * T) *
                        conditional_beta(conditional_path(jc, std::nullopt), jc);
    const double oracle = oracles::trapz_richardson(f, grid.dt()) + atom;
    CHECK(expected_beta(jc) == doctest::Approx(oracle).epsilon(1e-7));
}

TEST_CASE("pre-event premium coefficient rises with the event intensity") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 1024);
    double prev = -1.0;
    for (const double lambda : {0.0, 0.5, 1.0, 2.0}) {
        const auto [P, delta] = normal_coefficients(0.02, 0.15, lambda, 0.1333, 1000.0, grid);
        (void)P;
        CHECK(delta[0] > prev);
        prev = delta[0];
    }
}

TEST_CASE("solving the same model twice is bit-for-bit reproducible") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 512);
    const JumpCoefficients a = solve_jump_model(0.05, 0.2, 0.9, 0.3, 100.0, grid);
    const JumpCoefficients b = solve_jump_model(0.05, 0.2, 0.9, 0.3, 100.0, grid);
    CHECK(a.P_normal == b.P_normal);
    CHECK(a.delta_normal == b.delta_normal);
    CHECK(expected_beta(a) == expected_beta(b));
}

TEST_CASE("input validation") {
    const TimeGrid grid = TimeGrid::uniform(1.0, 64);
    CHECK_THROWS_AS(normal_coefficients(0.0, 0.1, 1.0, 0.5, 10.0, grid),
                    std::invalid_argument);
    CHECK_THROWS_AS(normal_coefficients(0.1, -0.1, 1.0, 0.5, 10.0, grid),
                    std::invalid_argument);
    CHECK_THROWS_AS(normal_coefficients(0.1, 0.2, -1.0, 0.5, 10.0, grid),
                    std::invalid_argument);
}
