#include "spotforward/closed_forms.hpp"

#include <cmath>
#include <stdexcept>

namespace spotforward {

namespace {

void check_domain(double t, double c, double rho, double T) {
    if (!(T > 0.0)) throw std::domain_error("horizon_T must be strictly positive");
    if (t < 0.0 || t > T) throw std::domain_error("t must lie in [0, horizon_T]");
    if (!(c > 0.0)) throw std::domain_error("cost level must be strictly positive");
    if (rho < 0.0) throw std::domain_error("rho must be nonnegative");
}

} // namespace

double p_closed(double t, double c, double rho, double T) {
    check_domain(t, c, rho, T);
    const double g = std::exp(t - T);
    return c * g / (c + (1.0 - g) * rho);
}

double delta_closed(double t, double c, double m, double rho, double T) {
    check_domain(t, c, rho, T);
    const double g = std::exp(t - T);
    const double denom = c + (1.0 - g) * rho;
    return c * m * ((c + rho) * (1.0 - g) - rho * g * (T - t)) / denom;
}

double beta_closed(double t, double c, double m, double rho, double T) {
    check_domain(t, c, rho, T);
    return m * (t - (c + rho * T) * std::expm1(t) / ((c + rho) * std::exp(T) - rho));
}

LargeRhoLimits large_rho_asymptotics(double c, double m, double T) {
    if (!(c > 0.0)) throw std::domain_error("cost level must be strictly positive");
    if (!(T > 0.0)) throw std::domain_error("horizon_T must be strictly positive");
    const double one_minus = -std::expm1(-T); // 1 - e^{-T}
    LargeRhoLimits lim;
    lim.rho_eT_P0 = c / one_minus;
    lim.rho_beta_T = c * m * (T - one_minus) / one_minus;
    lim.delta0 = c * m * (one_minus - T * std::exp(-T)) / one_minus;
    return lim;
}

} // namespace spotforward
