#pragma once

#include <functional>
#include <vector>

#include "spotforward/grid.hpp"
#include "spotforward/model.hpp"

namespace spotforward {

/**
 * Deterministic, strictly positive marginal-cost curve on [0,T].
 *
 * Step discontinuities are supported through side-aware evaluation: the
 * integrator asks for the left limit when a query time is the right
 * endpoint of the interval being integrated, so a jump located exactly on
 * a grid knot is attributed to the correct side. Callers building grids
 * must place a knot at every discontinuity.
 */
class CostCurve {
  public:
    enum class Side { Left, Right };

    static CostCurve constant(double level);
    //! Right-continuous step function; breaks are interior times of [0,T].
    static CostCurve piecewise(std::vector<double> breaks, std::vector<double> levels);
    //! Linear interpolation of knot samples.
    static CostCurve sampled(TimeGrid grid, std::vector<double> values);
    static CostCurve smooth(std::function<double(double)> f);

    double operator()(double t, Side side = Side::Right) const { return eval_(t, side); }

  private:
    std::function<double(double, Side)> eval_;
};

//! Equilibrium coefficient paths of the benchmark (no-event) model on a
//! uniform grid, together with the induced inventory/trade diagnostics.
struct CoefficientPaths {
    TimeGrid grid;
    std::vector<double> P;       // squared-inventory coefficient, P(T) = 1
    std::vector<double> Lambda;  // P*s + delta/rho
    std::vector<double> delta;   // linear inventory loading, delta(T) = 0
    std::vector<double> H;       // cumulative of (rho*P/c + 1) from 0
    std::vector<double> Q;       // retailer cumulative purchases, Q(0) = 0
    std::vector<double> mu;      // dealer marginal value of inventory flow
    std::vector<double> q;       // retailer trading rate
    std::vector<double> q_tilde; // dealer hedge rate, c*q_tilde = mu
};

/**
 * Solve the terminal-value problem P' = P(rho*P/c + 1), P(T) = 1 backward
 * on the grid. Uses the reciprocal substitution u = 1/P, which turns the
 * equation into the linear ODE u' = -u - rho/c and keeps the integration
 * well conditioned for penalty rates up to rho ~ 1e5 and beyond.
 */
std::vector<double> solve_riccati_backward(const CostCurve& cost, double rho,
                                           const TimeGrid& grid);

/**
 * Solve delta' = delta*(rho*P/c + 1) - c*m, delta(T) = 0 backward.
 * P_path must come from solve_riccati_backward on the same grid; it is
 * used only for consistency checks because the solver re-derives P
 * internally from the same reciprocal transform (w = delta/P satisfies
 * w' = -c*m/P, which avoids dividing by the tiny P values that occur at
 * large rho).
 */
std::vector<double> solve_delta_backward(const CostCurve& cost,
                                         const std::vector<double>& P_path, double m,
                                         double rho, const TimeGrid& grid);

/**
 * Assemble the full coefficient bundle from solved P and delta paths:
 * Lambda = P*s + delta/rho, H(t) = log(P(t)/P(0)) (exact cumulative of
 * rho*P/c + 1 along solutions), Q by the integrating-factor form of
 * Q' = rho*(Lambda - P*Q)/c, and the trade rates q, q_tilde, mu.
 */
CoefficientPaths assemble_paths(const std::vector<double>& P_path,
                                const std::vector<double>& delta_path, double s,
                                const CostCurve& cost, double m, double rho,
                                const TimeGrid& grid);

/**
 * Terminal hedge mass alpha(T) for the benchmark model. Along solutions,
 * 1 - rho*alpha(t) = exp(t - H(t)) holds exactly, which reduces the
 * integral to endpoint values of P: alpha(T) = (1 - e^T P(0)) / rho.
 */
double alpha_T(const std::vector<double>& P_path, const CostCurve& cost, double rho,
               const TimeGrid& grid);

} // namespace spotforward
