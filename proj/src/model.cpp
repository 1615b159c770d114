#include "spotforward/model.hpp"

#include <cmath>
#include <stdexcept>

namespace spotforward {

double demand_at(const DemandCurve& demand, double forward_price) {
    switch (demand.kind) {
        case DemandCurve::Kind::Constant:
            return demand.d_bar;
        case DemandCurve::Kind::Affine:
            return demand.d0 - demand.k * forward_price;
    }
    throw std::logic_error("demand_at: unknown demand kind");
}

namespace {

void require_finite(double x, const char* field) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(field) + " must be finite");
}

} // namespace

Model validate(Model model) {
    const ModelParams& p = model.params;
    require_finite(p.horizon_T, "horizon_T");
    if (!(p.horizon_T > 0.0)) throw std::invalid_argument("horizon_T must be strictly positive");
    require_finite(p.rho, "rho");
    if (!(p.rho > 0.0)) throw std::invalid_argument("rho must be strictly positive");
    require_finite(p.phi, "phi");
    if (p.phi < 0.0) throw std::invalid_argument("phi must be nonnegative");
    require_finite(p.expected_terminal, "expected_terminal");

    switch (p.demand.kind) {
        case DemandCurve::Kind::Constant:
            require_finite(p.demand.d_bar, "demand.d_bar");
            break;
        case DemandCurve::Kind::Affine:
            require_finite(p.demand.d0, "demand.d0");
            require_finite(p.demand.k, "demand.k");
            if (!(p.demand.k > 0.0))
                throw std::invalid_argument("demand.k must be strictly positive");
            break;
    }

    const CostProcess& c = model.cost;
    switch (c.kind) {
        case CostProcess::Kind::Constant:
            require_finite(c.c, "cost.c");
            if (!(c.c > 0.0)) throw std::invalid_argument("cost.c must be strictly positive");
            break;
        case CostProcess::Kind::RegimeSwitch:
            require_finite(c.c_normal, "cost.c_normal");
            if (!(c.c_normal > 0.0))
                throw std::invalid_argument("cost.c_normal must be strictly positive");
            require_finite(c.c_stress, "cost.c_stress");
            if (!(c.c_stress > 0.0))
                throw std::invalid_argument("cost.c_stress must be strictly positive");
            require_finite(c.lambda, "cost.lambda");
            if (c.lambda < 0.0) throw std::invalid_argument("cost.lambda must be nonnegative");
            break;
    }

    require_finite(model.supply.m_rate, "supply.m");
    require_finite(model.supply.M0, "supply.M0");
    return model;
}

} // namespace spotforward
