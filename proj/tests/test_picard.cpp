#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "spotforward/deterministic.hpp"
#include "spotforward/picard.hpp"

using namespace spotforward;

namespace {

struct Fixture {
    ModelParams params;
    CostCurve cost = CostCurve::constant(1.0);
    TimeGrid grid = TimeGrid::uniform(1.0, 256);
    CoefficientPaths benchmark;
    std::vector<double> sigma_bar;
};

//! Contraction-regime fixture: rho*T*sup(1/c) = 0.5, so eta = 0.75.
Fixture contraction_fixture(int n_steps = 256) {
    Fixture f;
    f.params.horizon_T = 1.0;
    f.params.rho = 0.5;
    f.grid = TimeGrid::uniform(1.0, n_steps);
    const auto P = solve_riccati_backward(f.cost, f.params.rho, f.grid);
    const auto delta = solve_delta_backward(f.cost, P, 1.0, f.params.rho, f.grid);
    f.benchmark = assemble_paths(P, delta, 1.0, f.cost, 1.0, f.params.rho, f.grid);
    f.sigma_bar.assign(f.grid.size(), 1.0);
    return f;
}

PerturbationState zero_state(const Fixture& f, double phi) {
    PerturbationState st;
    st.grid = f.grid;
    st.sigma_bar = f.sigma_bar;
    st.phi = phi;
    st.hat_mu.assign(f.grid.size(), 0.0);
    st.hat_Q.assign(f.grid.size(), 0.0);
    st.hat_S.assign(f.grid.size(), 0.0);
    return st;
}

} // namespace

TEST_CASE("exponential-kernel quadrature is exact for the kernel itself") {
    const int n = 64;
    const double T = 1.0, h = T / n;
    // f == 1: J(t) = 1 - exp(-(T - t))
    std::vector<double> ones(n + 1, 1.0);
    const std::vector<double> J = exp_kernel_backward(ones, h);
    double err = 0.0;
    for (int i = 0; i <= n; ++i)
        err = std::fmax(err, std::fabs(J[static_cast<std::size_t>(i)] -
                                       (1.0 - std::exp(-(T - i * h)))));
    CHECK(err <= 1e-13);

    // f(s) = exp(s): J(t) = exp(t) * (T - t); fourth-order in the spacing
    auto exp_err = [&](int steps) {
        const double hh = T / steps;
        std::vector<double> f(static_cast<std::size_t>(steps) + 1);
        for (int i = 0; i <= steps; ++i)
            f[static_cast<std::size_t>(i)] = std::exp(i * hh);
        const std::vector<double> Je = exp_kernel_backward(f, hh);
        double e = 0.0;
        for (int i = 0; i <= steps; ++i)
            e = std::fmax(e, std::fabs(Je[static_cast<std::size_t>(i)] -
                                       std::exp(i * hh) * (T - i * hh)));
        return e;
    };
    CHECK(exp_err(64) <= 5e-8);
    CHECK(exp_err(512) <= 1e-11);

    CHECK_THROWS_AS(exp_kernel_backward({1.0, 2.0}, 0.1), std::invalid_argument);
}

TEST_CASE("iteration contracts at the documented rate in the tractable regime") {
    const Fixture f = contraction_fixture();
    auto [state, report] =
        run_picard(f.params, f.cost, f.benchmark, f.sigma_bar, 0.001, 200, 1e-12);
    CHECK(report.converged);
    CHECK(report.eta == doctest::Approx(0.75).epsilon(1e-12));
    REQUIRE(report.ratios.size() >= 2);
    // the asymptotic update ratio is the terminal-coupling gain
    // rho * (1 - exp(-T)) = 0.3160..., slightly perturbed by phi
    CHECK(std::fabs(report.ratios.back() - 0.3160602794142788) <= 0.02);
    CHECK(report.phi_thresholds.first > 0.0);
    CHECK(report.phi_thresholds.second > 0.0);
    CHECK(oracles::sup_abs(state.hat_mu) > 0.0);
}

TEST_CASE("iteration reports divergence outside the tractable regime") {
    Fixture f;
    f.params.horizon_T = 0.5;
    f.params.rho = 3.0; // rho*T*sup(1/c) = 1.5 -> eta < 0
    f.grid = TimeGrid::uniform(0.5, 256);
    const auto P = solve_riccati_backward(f.cost, f.params.rho, f.grid);
    const auto delta = solve_delta_backward(f.cost, P, 1.0, f.params.rho, f.grid);
    f.benchmark = assemble_paths(P, delta, 1.0, f.cost, 1.0, f.params.rho, f.grid);
    f.sigma_bar.assign(f.grid.size(), 1.0);

    auto [state, report] =
        run_picard(f.params, f.cost, f.benchmark, f.sigma_bar, 0.001, 60, 1e-12);
    (void)state;
    CHECK_FALSE(report.converged);
    CHECK(report.eta == doctest::Approx(-1.25).epsilon(1e-12));
    REQUIRE(!report.ratios.empty());
    // the gain 3*(1 - e^{-1/2}) = 1.1804 > 1 shows up as the update ratio
    CHECK(std::fabs(report.ratios.back() - 1.1804) <= 0.02);
    CHECK(std::isnan(report.phi_thresholds.first));
}

TEST_CASE("zero perturbation weight yields the zero state") {
    const Fixture f = contraction_fixture(64);
    auto [state, report] =
        run_picard(f.params, f.cost, f.benchmark, f.sigma_bar, 0.0, 50, 1e-12);
    CHECK(report.converged);
    CHECK(oracles::sup_abs(state.hat_mu) == 0.0);
    CHECK(oracles::sup_abs(state.hat_Q) == 0.0);
}

TEST_CASE("one exact step is already the fixed point") {
    const Fixture f = contraction_fixture(128);
    const double phi = 0.002;
    const PerturbationState s1 = picard_step(zero_state(f, phi), f.benchmark, f.params, f.cost);
    const PerturbationState s2 = picard_step(s1, f.benchmark, f.params, f.cost);
    CHECK(oracles::sup_diff(s1.hat_mu, s2.hat_mu) <= 1e-12);
    CHECK(oracles::sup_diff(s1.hat_Q, s2.hat_Q) <= 1e-12);

    auto [limit, report] =
        run_picard(f.params, f.cost, f.benchmark, f.sigma_bar, phi, 200, 1e-13);
    REQUIRE(report.converged);
    CHECK(oracles::sup_diff(limit.hat_mu, s1.hat_mu) <= 1e-10);
}

TEST_CASE("exact step agrees with a dense linear solve of the discrete system") {
    const Fixture f = contraction_fixture(96);
    const double phi = 0.003;
    const std::size_t n = f.grid.size();
    const double h = f.grid.dt();
    const double T = f.grid.horizon();

    // affine map mu -> M(mu): one exact application of the update with the
    // terminal coupling included; the fixed point solves (I - L) mu = b
    auto apply = [&](const std::vector<double>& mu) {
        std::vector<double> ratio(n);
        for (std::size_t i = 0; i < n; ++i) ratio[i] = mu[i] / 1.0; // c == 1
        std::vector<double> Q = quad::cumulative4(ratio, h);
        for (double& v : Q) v = -v;
        std::vector<double> fsrc(n);
        for (std::size_t i = 0; i < n; ++i)
            fsrc[i] = phi * (Q[i] + f.benchmark.Q[i]);
        const std::vector<double> J = exp_kernel_backward(fsrc, h);
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = std::exp(f.grid.knots[i] - T) * f.params.rho * Q[n - 1] + J[i];
        return out;
    };

    const std::vector<double> zero(n, 0.0);
    const std::vector<double> b = apply(zero);
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        const std::vector<double> col = apply(e);
        for (std::size_t i = 0; i < n; ++i) A[i][j] = (i == j ? 1.0 : 0.0) - (col[i] - b[i]);
    }
    const std::vector<double> mu_dense = oracles::lu_solve(std::move(A), b);

    const PerturbationState st = picard_step(zero_state(f, phi), f.benchmark, f.params, f.cost);
    CHECK(oracles::sup_diff(st.hat_mu, mu_dense) <= 1e-8);
}

TEST_CASE("perturbation thresholds and the structural condition") {
    const Fixture f = contraction_fixture();
    const auto [phi1, phi2] = phi_thresholds(f.params, f.cost, f.sigma_bar, f.benchmark, 1.0);
    CHECK(phi1 > 0.0);
    CHECK(phi2 > 0.0);
    CHECK(phi2 < 0.1);

    ModelParams bad = f.params;
    bad.rho = 3.0; // rho*T*sup(1/c) = 3 >= 1
    CHECK_THROWS_WITH_AS(phi_thresholds(bad, f.cost, f.sigma_bar, f.benchmark, 1.0),
                         doctest::Contains("structural condition"), std::domain_error);
}

TEST_CASE("envelope bounds hold and the coefficient rises with phi") {
    Fixture f = contraction_fixture(128);
    f.params.phi = 0.2;
    const LemmaBounds lb =
        lemma_bounds(f.params, f.cost, f.sigma_bar, 1.0, 1.0, f.grid);
    CHECK(lb.within_bounds);
    CHECK(lb.monotone_in_phi);
    CHECK(lb.sup_P <= lb.C_P * (1.0 + 1e-10));
    CHECK(lb.sup_abs_Lambda <= lb.C_Lambda * (1.0 + 1e-10));
    CHECK(lb.sup_abs_Q <= lb.h_Q * (1.0 + 1e-10));
}

TEST_CASE("state and benchmark grids must agree in picard_step") {
    const Fixture f = contraction_fixture(64);
    PerturbationState st = zero_state(f, 0.001);
    st.grid = TimeGrid::uniform(1.0, 32);
    st.hat_mu.assign(st.grid.size(), 0.0);
    st.hat_Q.assign(st.grid.size(), 0.0);
    st.hat_S.assign(st.grid.size(), 0.0);
    st.sigma_bar.assign(st.grid.size(), 1.0);
    CHECK_THROWS_AS(picard_step(st, f.benchmark, f.params, f.cost), std::invalid_argument);
}
