#pragma once

#include <string>
#include <vector>

#include "spotforward/grid.hpp"
#include "spotforward/jump.hpp"
#include "spotforward/model.hpp"

namespace spotforward {

//! Equilibrium quote of one venue for a given traded forward quantity.
struct VenueQuote {
    double forward = 0.0;
    double spot0 = 0.0;
    double premium = 0.0; // forward - spot0 = rho*P0*quantity + delta0
    double P0 = 0.0;
    double delta0 = 0.0;
    double expected_beta_T = 0.0;
};

/**
 * Price the venue described by cost at traded quantity s. Constant-cost
 * venues use the closed forms; regime-switching venues solve the jump
 * system on the grid and integrate beta over the event time.
 */
VenueQuote venue_quote(const ModelParams& params, const CostProcess& cost,
                       const SupplySpec& supply, double quantity, const TimeGrid& grid);

//! Quantity the dealer absorbs at forward price F: intercept + slope*F.
struct SupplyCurve {
    double intercept = 0.0;
    double slope = 0.0;
    double quantity_at(double forward) const { return intercept + slope * forward; }
};

SupplyCurve supply_curve(const ModelParams& params, const CostProcess& cost,
                         const SupplySpec& supply, const TimeGrid& grid);

//! Forward level and quantity at which demand meets the dealer's supply.
struct MarketClearing {
    double forward = 0.0;
    double quantity = 0.0;
    VenueQuote quote;
};

MarketClearing clear_market(const ModelParams& params, const CostProcess& cost,
                            const SupplySpec& supply, const TimeGrid& grid);

/**
 * Difference between the two venues' time-0 spot quotes when both serve
 * the same constant demanded quantity. Computed along two algebraically
 * equivalent routes (quote difference vs. coefficient differences) that
 * are cross-checked internally.
 */
double parity_residual(const ModelParams& params, const CostProcess& onshore,
                       const CostProcess& offshore, const SupplySpec& supply,
                       const TimeGrid& grid);

//! Difference between the venues' forward quotes at the same quantity.
double forward_wedge(const ModelParams& params, const CostProcess& onshore,
                     const CostProcess& offshore, const SupplySpec& supply,
                     const TimeGrid& grid);

//! Demanded quantity that makes the spot quotes of the two venues agree.
double parity_implied_demand(const ModelParams& params, const CostProcess& onshore,
                             const CostProcess& offshore, const SupplySpec& supply,
                             const TimeGrid& grid);

//! Fixed inputs of the two-parameter calibration.
struct CalibrationSetup {
    ModelParams params; // demand must be Constant: the common hedger quantity
    double c_onshore = 0.05;
    double c_normal = 0.02; // offshore pre-event level; must be < c_onshore
    SupplySpec supply;
    TimeGrid grid;
    double lambda_max = 50.0;
    double c_stress_cap_factor = 100.0; // search top = factor * c_onshore
};

struct CalibrationResult {
    double target_wedge = 0.0;
    double lambda_implied = 0.0;
    double c_stress_implied = 0.0;
    double parity_residual = 0.0;
    double wedge_residual = 0.0;
    double stress_probability = 0.0;
    int iterations = 0;
    bool converged = false;
    bool multiple_roots = false;
    std::string note;
};

/**
 * Recover (lambda, c_stress) such that spot parity holds exactly and the
 * offshore-onshore forward wedge matches the target. Nested search: for
 * each stress level the event intensity is pinned by the parity root,
 * then the stress level is bisected on the (monotone) wedge along that
 * manifold, and a damped two-dimensional Newton polish drives both
 * residuals below 1e-9. A target equal to the intensity-zero
 * parity-consistent wedge is reported as the degenerate no-event row,
 * where the stress level is undetermined.
 */
CalibrationResult calibrate(double target_wedge, const CalibrationSetup& setup);

//! Calibrate a list of targets, warm-starting each row from the previous.
std::vector<CalibrationResult> sweep(const std::vector<double>& targets,
                                     const CalibrationSetup& setup);

} // namespace spotforward
