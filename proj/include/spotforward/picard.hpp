#pragma once

#include <utility>
#include <vector>

#include "spotforward/deterministic.hpp"
#include "spotforward/grid.hpp"
#include "spotforward/model.hpp"

namespace spotforward {

/**
 * First-order perturbation of the equilibrium when the dealer prices the
 * spot variance with weight phi. hat_mu is the perturbation of the
 * marginal continuation value, hat_Q of the retailer's cumulative
 * purchases and hat_S of the spot quote; sigma_bar holds the exogenous
 * deterministic volatility samples on the grid.
 */
struct PerturbationState {
    TimeGrid grid;
    std::vector<double> hat_mu;
    std::vector<double> hat_Q;
    std::vector<double> hat_S;
    std::vector<double> sigma_bar;
    double phi = 0.0;
};

//! Diagnostics of the fixed-point iteration for the perturbation.
struct ContractionReport {
    double eta = 0.0; // 1 - (rho*T*sup(1/c))^2; positive in the tractable regime
    std::vector<double> iterate_norms; // sup-norm update sizes per iteration
    std::vector<double> ratios;        // successive norm ratios
    std::pair<double, double> phi_thresholds{0.0, 0.0};
    bool converged = false;
};

/**
 * J_i = integral_{t_i}^{T} exp(t_i - s) f(s) ds for knot samples f on a
 * uniform grid with spacing h. Fourth-order product integration: on each
 * interval f is replaced by the cubic through the four nearest knots and
 * integrated against the exact exponential kernel, so the scheme stays
 * exact for the kernel itself no matter how coarse the grid is.
 */
std::vector<double> exp_kernel_backward(const std::vector<double>& f, double h);

/**
 * Solve the coupled linear two-point problem of one perturbation update
 * exactly. The terminal coupling through hat_Q(T) is closed by scalar
 * shooting (the map is affine in that scalar), and the small
 * phi-weighted integral coupling is iterated to machine tolerance.
 * Throws when the inner iteration cap is hit, which signals the
 * eta <= 0 regime.
 */
PerturbationState picard_step(const PerturbationState& prev,
                              const CoefficientPaths& benchmark,
                              const ModelParams& params, const CostCurve& cost);

/**
 * Iterate the one-lag update map from the zero state and record the
 * update norms: hat_mu is refreshed from the previous iterate's hat_Q
 * through the exponential kernel, then hat_Q and hat_S are rebuilt from
 * the new hat_mu. The norm ratios expose the contraction (or expansion)
 * factor of the map; non-convergence is reported, not thrown.
 */
std::pair<PerturbationState, ContractionReport>
run_picard(const ModelParams& params, const CostCurve& cost,
           const CoefficientPaths& benchmark, std::vector<double> sigma_bar, double phi,
           int max_iter, double tol);

//! A-priori envelopes for the phi-augmented coefficient system, checked
//! against a direct solve of that system.
struct LemmaBounds {
    double C_P = 0.0;       // upper envelope for P
    double C_Lambda = 0.0;  // sup-norm envelope for Lambda
    double h_Q = 0.0;       // sup-norm envelope for Q
    double sup_P = 0.0;
    double sup_abs_Lambda = 0.0;
    double sup_abs_Q = 0.0;
    bool within_bounds = false;
    bool monotone_in_phi = false; // P(phi) >= P(0) pointwise
};

LemmaBounds lemma_bounds(const ModelParams& params, const CostCurve& cost,
                         const std::vector<double>& sigma_bar, double m, double s,
                         const TimeGrid& grid);

/**
 * Perturbation-size thresholds (phi_1, phi_2): below phi_1 the update map
 * sends the radius-R ball into itself, below phi_2 it contracts. Throws
 * when the structural condition rho*T*sup(1/c) < 1 fails. m and s are
 * recovered from the benchmark paths.
 */
std::pair<double, double> phi_thresholds(const ModelParams& params, const CostCurve& cost,
                                         const std::vector<double>& sigma_bar,
                                         const CoefficientPaths& benchmark, double R);

} // namespace spotforward
