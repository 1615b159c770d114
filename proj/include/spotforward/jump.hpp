#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "spotforward/grid.hpp"

namespace spotforward {

/**
 * Coefficient paths of the regime-switching model: the marginal cost sits
 * at c_normal until a Poisson event with intensity lambda, then at
 * c_stress forever (the stress state absorbs). The stressed coefficients
 * are the constant-cost closed forms; the normal-state coefficients solve
 * the event-compensated terminal-value system.
 */
struct JumpCoefficients {
    TimeGrid grid;
    std::vector<double> P_normal;
    std::vector<double> P_stress;
    std::vector<double> delta_normal;
    std::vector<double> delta_stress;
    double lambda = 0.0;
    // model inputs carried along so realized paths and expectations can be
    // produced from the solved object alone
    double c_normal = 0.0;
    double c_stress = 0.0;
    double m_rate = 0.0;
    double rho = 0.0;
};

//! Post-event coefficients on the grid (constant-cost closed forms).
std::pair<std::vector<double>, std::vector<double>>
stressed_coefficients(double c_stress, double m, double rho, const TimeGrid& grid);

/**
 * Pre-event coefficients (P_normal, delta_normal). Solved through the
 * reciprocal transform v = 1/P_normal, whose ODE
 *   v' = lambda*P_stress(t)*v^2 - (1+lambda)*v - rho/c_normal,  v(T) = 1
 * is integrated backward with RK4; the post-event coefficients entering
 * the compensator are evaluated in closed form at every stage time. Steps
 * are subdivided deterministically when lambda * c_stress/c_normal makes
 * the local Lipschitz constant large relative to the grid spacing.
 */
std::pair<std::vector<double>, std::vector<double>>
normal_coefficients(double c_normal, double c_stress, double lambda, double m, double rho,
                    const TimeGrid& grid);

//! Solve both states and bundle them with the model inputs.
JumpCoefficients solve_jump_model(double c_normal, double c_stress, double lambda,
                                  double m, double rho, const TimeGrid& grid);

/**
 * Coefficients realized along one event scenario: the normal-state values
 * before the event time and the stressed values after it (no event if
 * jump_time is empty). realized_H is the running cumulative of
 * rho*P/c + 1 along the realized path, evaluated through exact
 * logarithmic identities rather than quadrature of the raw integrand.
 */
struct ConditionalPath {
    std::optional<double> jump_time;
    std::vector<double> realized_cost;
    std::vector<double> realized_P;
    std::vector<double> realized_delta;
    std::vector<double> realized_H;
};

ConditionalPath conditional_path(const JumpCoefficients& coeffs,
                                 std::optional<double> jump_time);

/**
 * Terminal supply-flow coefficient beta(T) along one event scenario,
 * propagated exactly across the event: the pre-event value comes from a
 * quadrature-free representation of the pathwise ODE
 * beta' = (delta - rho*P*beta)/c, and the post-event segment is folded in
 * through the stressed closed forms.
 */
double conditional_beta(const ConditionalPath& path, const JumpCoefficients& coeffs);

//! Terminal hedge mass alpha(T) along one event scenario (same idea).
double conditional_alpha(const ConditionalPath& path, const JumpCoefficients& coeffs);

/**
 * E[beta(T)] over the event time: the density part is integrated with
 * composite Simpson on grid-aligned nodes plus a refined panel near
 * maturity (where the integrand has a boundary layer of width ~ c/rho),
 * and the no-event atom exp(-lambda*T) is added exactly.
 */
double expected_beta(const JumpCoefficients& coeffs);

//! E[alpha(T)] over the event time (same scheme).
double expected_alpha(const JumpCoefficients& coeffs);

} // namespace spotforward
