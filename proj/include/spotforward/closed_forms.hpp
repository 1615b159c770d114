#pragma once

namespace spotforward {

/**
 * Constant-cost coefficients of the dealer's quadratic value function.
 * P scales squared inventory, delta is the linear inventory loading and
 * beta the inventory-free drift accumulated by the supply flow.
 */
double p_closed(double t, double c, double rho, double T);
double delta_closed(double t, double c, double m, double rho, double T);
double beta_closed(double t, double c, double m, double rho, double T);

//! Limits of rho-scaled quantities as the inventory penalty grows.
struct LargeRhoLimits {
    double rho_eT_P0; // lim rho * e^T * P(0)
    double rho_beta_T; // lim rho * beta(T)
    double delta0;     // lim delta(0)
};

LargeRhoLimits large_rho_asymptotics(double c, double m, double T);

} // namespace spotforward
