#include "spotforward/calibration.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "spotforward/closed_forms.hpp"
#include "spotforward/log.hpp"
#include "spotforward/rootfind.hpp"

namespace spotforward {

namespace {

constexpr double kResidualTol = 1e-9;

struct VenueStats {
    double P0 = 0.0;
    double delta0 = 0.0;
    double Ebeta = 0.0;
};

void check_grid(const ModelParams& params, const TimeGrid& grid) {
    if (std::fabs(grid.horizon() - params.horizon_T) >
        1e-12 * std::fmax(1.0, params.horizon_T))
        throw std::invalid_argument("grid horizon does not match horizon_T");
}

VenueStats venue_stats(const ModelParams& params, const CostProcess& cost,
                       const SupplySpec& supply, const TimeGrid& grid) {
    const double T = params.horizon_T;
    const double rho = params.rho;
    const double m = supply.m_rate;
    const bool constant_like =
        cost.kind == CostProcess::Kind::Constant ||
        (cost.kind == CostProcess::Kind::RegimeSwitch && cost.lambda == 0.0);
    if (constant_like) {
        const double c = cost.kind == CostProcess::Kind::Constant ? cost.c : cost.c_normal;
        return {p_closed(0.0, c, rho, T), delta_closed(0.0, c, m, rho, T),
                beta_closed(T, c, m, rho, T)};
    }
    JumpCoefficients jc =
        solve_jump_model(cost.c_normal, cost.c_stress, cost.lambda, m, rho, grid);
    return {jc.P_normal[0], jc.delta_normal[0], expected_beta(jc)};
}

double require_constant_demand(const ModelParams& params, const char* op) {
    if (params.demand.kind != DemandCurve::Kind::Constant)
        throw std::invalid_argument(std::string(op) +
                                    ": venue comparison requires constant demand");
    return params.demand.d_bar;
}

} // namespace

VenueQuote venue_quote(const ModelParams& params, const CostProcess& cost,
                       const SupplySpec& supply, double quantity, const TimeGrid& grid) {
    validate(Model{params, cost, supply});
    check_grid(params, grid);
    const VenueStats vs = venue_stats(params, cost, supply, grid);
    const double rho = params.rho;
    VenueQuote q;
    q.P0 = vs.P0;
    q.delta0 = vs.delta0;
    q.expected_beta_T = vs.Ebeta;
    q.forward = params.expected_terminal +
                rho * (std::exp(params.horizon_T) * vs.P0 * quantity - vs.Ebeta);
    q.premium = rho * vs.P0 * quantity + vs.delta0;
    q.spot0 = q.forward - q.premium;
    return q;
}

SupplyCurve supply_curve(const ModelParams& params, const CostProcess& cost,
                         const SupplySpec& supply, const TimeGrid& grid) {
    validate(Model{params, cost, supply});
    check_grid(params, grid);
    const VenueStats vs = venue_stats(params, cost, supply, grid);
    const double disc = std::exp(-params.horizon_T);
    SupplyCurve sc;
    sc.slope = disc / (params.rho * vs.P0);
    sc.intercept = disc * vs.Ebeta / vs.P0 - sc.slope * params.expected_terminal;
    return sc;
}

MarketClearing clear_market(const ModelParams& params, const CostProcess& cost,
                            const SupplySpec& supply, const TimeGrid& grid) {
    validate(Model{params, cost, supply});
    check_grid(params, grid);
    MarketClearing out;
    if (params.demand.kind == DemandCurve::Kind::Constant) {
        out.quantity = params.demand.d_bar;
        out.quote = venue_quote(params, cost, supply, out.quantity, grid);
        out.forward = out.quote.forward;
        return out;
    }
    const SupplyCurve sc = supply_curve(params, cost, supply, grid);
    const double k = params.demand.k;
    const double f_star = (params.demand.d0 - sc.intercept) / (k + sc.slope);
    // cross-check the closed form against a bracketing search on the
    // excess-demand function
    auto excess = [&](double F) { return demand_at(params.demand, F) - sc.quantity_at(F); };
    const double span = std::fmax(1.0, std::fabs(f_star));
    const double f_bis = bisect(f_star - span, f_star + span, excess, 1e-14);
    if (std::fabs(f_bis - f_star) > 1e-10 * std::fmax(1.0, std::fabs(f_star)))
        throw std::runtime_error("market clearing cross-check failed");
    out.quantity = demand_at(params.demand, f_star);
    out.quote = venue_quote(params, cost, supply, out.quantity, grid);
    out.forward = out.quote.forward;
    if (std::fabs(out.forward - f_star) > 1e-9 * std::fmax(1.0, std::fabs(f_star)))
        throw std::runtime_error("market clearing is inconsistent with the venue quote");
    return out;
}

namespace {

struct PairedVenues {
    VenueStats on, off;
    double A = 0.0; // parity sensitivity to the demanded quantity
    double B = 0.0; // parity offset
    double rho = 0.0, T = 0.0;
};

PairedVenues paired(const ModelParams& params, const CostProcess& onshore,
                    const CostProcess& offshore, const SupplySpec& supply,
                    const TimeGrid& grid) {
    check_grid(params, grid);
    PairedVenues pv;
    pv.rho = params.rho;
    pv.T = params.horizon_T;
    pv.on = venue_stats(params, onshore, supply, grid);
    pv.off = venue_stats(params, offshore, supply, grid);
    pv.A = std::expm1(pv.T) * pv.rho * (pv.on.P0 - pv.off.P0);
    pv.B = pv.rho * (pv.on.Ebeta - pv.off.Ebeta) + (pv.on.delta0 - pv.off.delta0);
    return pv;
}

double parity_of(const PairedVenues& pv, double d_bar) { return pv.A * d_bar - pv.B; }

double wedge_of(const PairedVenues& pv, double d_bar) {
    return pv.rho * (std::exp(pv.T) * d_bar * (pv.on.P0 - pv.off.P0) -
                     (pv.on.Ebeta - pv.off.Ebeta));
}

} // namespace

double parity_residual(const ModelParams& params, const CostProcess& onshore,
                       const CostProcess& offshore, const SupplySpec& supply,
                       const TimeGrid& grid) {
    const double d_bar = require_constant_demand(params, "parity_residual");
    const PairedVenues pv = paired(params, onshore, offshore, supply, grid);
    const double direct = parity_of(pv, d_bar);
    // cross-check against the difference of the full spot quotes
    const VenueQuote qy = venue_quote(params, onshore, supply, d_bar, grid);
    const VenueQuote qh = venue_quote(params, offshore, supply, d_bar, grid);
    const double via_quotes = qy.spot0 - qh.spot0;
    if (std::fabs(direct - via_quotes) > 1e-8 * std::fmax(1.0, std::fabs(direct)))
        throw std::runtime_error("parity residual routes disagree");
    return direct;
}

double forward_wedge(const ModelParams& params, const CostProcess& onshore,
                     const CostProcess& offshore, const SupplySpec& supply,
                     const TimeGrid& grid) {
    const double d_bar = require_constant_demand(params, "forward_wedge");
    const PairedVenues pv = paired(params, onshore, offshore, supply, grid);
    const double direct = wedge_of(pv, d_bar);
    const VenueQuote qy = venue_quote(params, onshore, supply, d_bar, grid);
    const VenueQuote qh = venue_quote(params, offshore, supply, d_bar, grid);
    if (std::fabs(direct - (qy.forward - qh.forward)) >
        1e-8 * std::fmax(1.0, std::fabs(direct)))
        throw std::runtime_error("forward wedge routes disagree");
    return direct;
}

double parity_implied_demand(const ModelParams& params, const CostProcess& onshore,
                             const CostProcess& offshore, const SupplySpec& supply,
                             const TimeGrid& grid) {
    const PairedVenues pv = paired(params, onshore, offshore, supply, grid);
    if (pv.A == 0.0)
        throw std::runtime_error(
            "parity-implied demand undefined: venues price inventory identically");
    return pv.B / pv.A;
}

namespace {

CalibrationResult calibrate_impl(double target, const CalibrationSetup& setup,
                                 std::optional<std::pair<double, double>> c_hint) {
    const ModelParams& params = setup.params;
    const double d_bar = require_constant_demand(params, "calibrate");
    validate(Model{params, CostProcess::constant(setup.c_onshore), setup.supply});
    check_grid(params, setup.grid);
    if (!(setup.c_normal > 0.0) || !(setup.c_onshore > setup.c_normal))
        throw std::invalid_argument(
            "calibrate requires 0 < c_normal < c_onshore (offshore must be cheaper pre-event)");

    const double T = params.horizon_T;
    const double rho = params.rho;
    const double m = setup.supply.m_rate;

    // onshore side and the no-event offshore side are closed-form
    const double P_on = p_closed(0.0, setup.c_onshore, rho, T);
    const double d_on = delta_closed(0.0, setup.c_onshore, m, rho, T);
    const double Eb_on = beta_closed(T, setup.c_onshore, m, rho, T);
    const double P_off0 = p_closed(0.0, setup.c_normal, rho, T);
    const double d_off0 = delta_closed(0.0, setup.c_normal, m, rho, T);
    const double Eb_off0 = beta_closed(T, setup.c_normal, m, rho, T);

    const double A0 = std::expm1(T) * rho * (P_on - P_off0);
    const double B0 = rho * (Eb_on - Eb_off0) + (d_on - d_off0);

    CalibrationResult res;
    res.target_wedge = target;
    res.lambda_implied = std::numeric_limits<double>::quiet_NaN();
    res.c_stress_implied = std::numeric_limits<double>::quiet_NaN();
    res.parity_residual = std::numeric_limits<double>::quiet_NaN();
    res.wedge_residual = std::numeric_limits<double>::quiet_NaN();
    res.stress_probability = std::numeric_limits<double>::quiet_NaN();

    const double d_star0 = B0 / A0; // demand making the no-event venues agree
    const double wedge0 =
        rho * (std::exp(T) * d_star0 * (P_on - P_off0) - (Eb_on - Eb_off0));

    if (std::fabs(target - wedge0) <= kResidualTol) {
        res.lambda_implied = 0.0;
        res.stress_probability = 0.0;
        res.parity_residual = 0.0;
        res.wedge_residual = target - wedge0;
        res.converged = true;
        res.note = "stress level irrelevant at lambda=0";
        return res;
    }
    if (target > wedge0) {
        res.converged = false;
        res.note = "target-out-of-range: exceeds the no-event parity-consistent wedge";
        return res;
    }
    if (target <= 0.0) {
        res.converged = false;
        res.note = "target-out-of-range: the wedge on the parity manifold is strictly positive";
        return res;
    }

    int evals = 0;
    auto off_stats = [&](double lam, double cbar) -> VenueStats {
        ++evals;
        return venue_stats(params,
                           CostProcess::regime_switch(setup.c_normal, cbar, lam),
                           setup.supply, setup.grid);
    };
    auto parity_at = [&](const VenueStats& off) {
        const double A = std::expm1(T) * rho * (P_on - off.P0);
        const double B = rho * (Eb_on - off.Ebeta) + (d_on - off.delta0);
        return A * d_bar - B;
    };
    auto wedge_at = [&](const VenueStats& off) {
        return rho * (std::exp(T) * d_bar * (P_on - off.P0) - (Eb_on - off.Ebeta));
    };

    const double par0 = A0 * d_bar - B0; // parity at lambda = 0, any stress level
    if (par0 >= 0.0) {
        res.converged = false;
        res.note = "no-parity-solution: demand at or above the no-event parity point";
        return res;
    }

    // smallest intensity balancing parity for a given stress level
    auto inner = [&](double cbar, std::optional<double> warm) -> std::optional<double> {
        auto f = [&](double lam) {
            return lam == 0.0 ? par0 : parity_at(off_stats(lam, cbar));
        };
        if (warm) {
            const double lo = std::fmax(1e-8, *warm / 4.0);
            const double hi = std::fmin(setup.lambda_max, *warm * 4.0);
            if (lo < hi) {
                const double flo = f(lo);
                const double fhi = f(hi);
                if (flo < 0.0 && fhi > 0.0)
                    return zero_in(lo, hi, f, 1e-11);
            }
        }
        const double fhi = f(setup.lambda_max);
        if (!(fhi > 0.0)) return std::nullopt;
        return zero_in(0.0, setup.lambda_max, f, 1e-11);
    };

    const double c_lo_base = setup.c_onshore * (1.0 + 1e-9);
    const double c_hi_base = setup.c_stress_cap_factor * setup.c_onshore;
    double c_lo = c_lo_base;
    double c_hi = c_hi_base;
    if (c_hint) {
        c_lo = std::fmax(c_lo_base, c_hint->first);
        c_hi = std::fmin(c_hi_base, c_hint->second);
    }

    std::optional<double> lam_hi = inner(c_hi, std::nullopt);
    double g_hi = 0.0;
    if (lam_hi) g_hi = wedge_at(off_stats(*lam_hi, c_hi)) - target;
    if (!lam_hi || g_hi < 0.0) {
        if (c_hint) return calibrate_impl(target, setup, std::nullopt);
        if (!lam_hi) {
            res.converged = false;
            res.note = "no-parity-solution: no intensity in range balances parity";
            return res;
        }
        res.converged = false;
        res.note = "target-out-of-range: above the attainable wedge on the parity manifold";
        return res;
    }
    if (c_hint) {
        // the hinted lower end must sit on the negative side of the target
        std::optional<double> lam_lo = inner(c_lo, lam_hi);
        if (lam_lo && wedge_at(off_stats(*lam_lo, c_lo)) - target > 0.0)
            return calibrate_impl(target, setup, std::nullopt);
    }

    // geometric bisection on the stress level along the parity manifold
    std::optional<double> lam_warm = lam_hi;
    double lo = c_lo, hi = c_hi;
    while (hi - lo > 1e-6 * hi) {
        const double mid = std::sqrt(lo * hi);
        std::optional<double> lam_mid = inner(mid, lam_warm);
        if (!lam_mid) {
            lo = mid; // no parity root: the manifold has not started yet
            continue;
        }
        lam_warm = lam_mid;
        const double g = wedge_at(off_stats(*lam_mid, mid)) - target;
        if (g < 0.0) {
            lo = mid;
        } else {
            hi = mid;
            lam_hi = lam_mid;
        }
    }

    double lam = *lam_hi;
    double cbar = hi;

    // damped two-dimensional Newton polish on (parity, wedge - target)
    auto residuals = [&](double l, double cb) {
        const VenueStats st = off_stats(l, cb);
        return std::pair<double, double>(parity_at(st), wedge_at(st) - target);
    };
    auto [f1, f2] = residuals(lam, cbar);
    for (int it = 0; it < 40; ++it) {
        if (std::fmax(std::fabs(f1), std::fabs(f2)) <= 1e-12) break;
        const double hl = std::fmax(1e-9, 1e-6 * std::fabs(lam));
        const double hcb = 1e-6 * cbar;
        const auto [a1, a2] = residuals(lam + hl, cbar);
        const auto [b1, b2] = residuals(lam, cbar + hcb);
        const double j11 = (a1 - f1) / hl, j12 = (b1 - f1) / hcb;
        const double j21 = (a2 - f2) / hl, j22 = (b2 - f2) / hcb;
        const double det = j11 * j22 - j12 * j21;
        if (std::fabs(det) < 1e-300) break;
        const double dl = -(j22 * f1 - j12 * f2) / det;
        const double dcb = -(j11 * f2 - j21 * f1) / det;
        bool accepted = false;
        double step = 1.0;
        for (int half = 0; half < 10; ++half, step *= 0.5) {
            const double lam_t =
                std::fmin(setup.lambda_max, std::fmax(0.0, lam + step * dl));
            const double cb_t =
                std::fmin(c_hi_base, std::fmax(c_lo_base, cbar + step * dcb));
            const auto [t1, t2] = residuals(lam_t, cb_t);
            if (std::fmax(std::fabs(t1), std::fabs(t2)) <
                std::fmax(std::fabs(f1), std::fabs(f2))) {
                lam = lam_t;
                cbar = cb_t;
                f1 = t1;
                f2 = t2;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    // report the smallest intensity root if parity happens to have several
    bool multiple = false;
    for (int j = 1; j <= 8; ++j) {
        const double probe = lam * j / 9.0;
        if (probe <= 0.0) continue;
        if (parity_at(off_stats(probe, cbar)) >= 0.0) {
            multiple = true;
            const double lam_small = zero_in(
                probe * (j > 1 ? (j - 1.0) / j : 1e-8), probe,
                [&](double l) { return l == 0.0 ? par0 : parity_at(off_stats(l, cbar)); },
                1e-11);
            lam = lam_small;
            std::tie(f1, f2) = residuals(lam, cbar);
            break;
        }
    }

    res.lambda_implied = lam;
    res.c_stress_implied = cbar;
    res.parity_residual = f1;
    res.wedge_residual = f2;
    res.stress_probability = -std::expm1(-lam * T);
    res.iterations = evals;
    res.multiple_roots = multiple;
    res.converged =
        std::fabs(f1) <= kResidualTol && std::fabs(f2) <= kResidualTol;
    if (!res.converged)
        res.note = "no-parity-solution: residual tolerance not reached";
    else if (multiple)
        res.note = "multiple intensity roots; smallest reported";
    return res;
}

} // namespace

CalibrationResult calibrate(double target_wedge, const CalibrationSetup& setup) {
    return calibrate_impl(target_wedge, setup, std::nullopt);
}

std::vector<CalibrationResult> sweep(const std::vector<double>& targets,
                                     const CalibrationSetup& setup) {
    std::vector<CalibrationResult> out;
    out.reserve(targets.size());
    std::optional<double> prev_c;
    for (double target : targets) {
        CalibrationResult row;
        try {
            std::optional<std::pair<double, double>> hint;
            if (prev_c) hint = std::make_pair(*prev_c / 8.0, *prev_c * 8.0);
            row = calibrate_impl(target, setup, hint);
        } catch (const std::exception& e) {
            row = CalibrationResult{};
            row.target_wedge = target;
            row.lambda_implied = std::numeric_limits<double>::quiet_NaN();
            row.c_stress_implied = std::numeric_limits<double>::quiet_NaN();
            row.parity_residual = std::numeric_limits<double>::quiet_NaN();
            row.wedge_residual = std::numeric_limits<double>::quiet_NaN();
            row.stress_probability = std::numeric_limits<double>::quiet_NaN();
            row.converged = false;
            row.note = std::string("error: ") + e.what();
            logging::warn("sweep row for target %.12g failed: %s", target, e.what());
        }
        if (row.converged && std::isfinite(row.c_stress_implied))
            prev_c = row.c_stress_implied;
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace spotforward
