#pragma once

#include <string>

#include "spotforward/grid.hpp"

namespace spotforward {

//! Demand for forward contracts at the venue, as a function of the
//! forward price F. Either a fixed quantity or affine d0 - k*F.
struct DemandCurve {
    enum class Kind { Constant, Affine };
    Kind kind = Kind::Constant;
    double d_bar = 0.0; // Constant: fixed demanded quantity
    double d0 = 0.0;    // Affine: intercept
    double k = 0.0;     // Affine: slope (> 0), demand = d0 - k*F

    static DemandCurve constant(double d) {
        DemandCurve c;
        c.kind = Kind::Constant;
        c.d_bar = d;
        return c;
    }
    static DemandCurve affine(double d0, double k) {
        DemandCurve c;
        c.kind = Kind::Affine;
        c.d0 = d0;
        c.k = k;
        return c;
    }
};

double demand_at(const DemandCurve& demand, double forward_price);

//! Marginal transaction cost specification: either a constant level or a
//! two-state regime switch (normal level until a Poisson event with
//! intensity lambda, stressed level afterwards; the stress state absorbs).
struct CostProcess {
    enum class Kind { Constant, RegimeSwitch };
    Kind kind = Kind::Constant;
    double c = 0.0;        // Constant level
    double c_normal = 0.0; // RegimeSwitch: pre-event level
    double c_stress = 0.0; // RegimeSwitch: post-event level
    double lambda = 0.0;   // RegimeSwitch: event intensity (>= 0)

    static CostProcess constant(double level) {
        CostProcess p;
        p.kind = Kind::Constant;
        p.c = level;
        return p;
    }
    static CostProcess regime_switch(double c_normal, double c_stress, double lambda) {
        CostProcess p;
        p.kind = Kind::RegimeSwitch;
        p.c_normal = c_normal;
        p.c_stress = c_stress;
        p.lambda = lambda;
        return p;
    }
};

//! Deterministic net supply flow: cumulative endowment M0 + m_rate * t.
struct SupplySpec {
    double m_rate = 0.0;
    double M0 = 0.0;
};

//! Scalar model parameters shared across venues.
struct ModelParams {
    double horizon_T = 1.0;
    double rho = 1.0;               // inventory penalty rate
    double phi = 0.0;               // risk-sensitivity weight on spot variance
    double expected_terminal = 1.0; // E[terminal fundamental value]
    DemandCurve demand;
};

struct Model {
    ModelParams params;
    CostProcess cost;
    SupplySpec supply;
};

//! Check type invariants; throws std::invalid_argument naming the first
//! violated field. Returns the model unchanged so calls can be chained.
Model validate(Model model);

} // namespace spotforward
