#include "spotforward/picard.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spotforward/log.hpp"

namespace spotforward {

namespace {

//! Moments M_k = integral_0^1 exp(-h*s) s^k ds, k = 0..3. The small-h
//! branch uses the series (the closed forms cancel catastrophically
//! there); the large-h branch uses the stable upward recursion.
std::array<double, 4> exp_moments(double h) {
    std::array<double, 4> M{};
    if (h < 0.5) {
        // M_k = sum_m (-h)^m / (m! (k+m+1))
        for (int k = 0; k < 4; ++k) {
            double pw = 1.0; // (-h)^m / m!
            double sum = 0.0;
            for (int mm = 0; mm < 40; ++mm) {
                sum += pw / (k + mm + 1.0);
                pw *= -h / (mm + 1.0);
                if (std::fabs(pw) < 1e-20) break;
            }
            M[static_cast<std::size_t>(k)] = sum;
        }
    } else {
        const double e = std::exp(-h);
        M[0] = (1.0 - e) / h;
        for (int k = 1; k < 4; ++k)
            M[static_cast<std::size_t>(k)] = (k * M[static_cast<std::size_t>(k - 1)] - e) / h;
    }
    return M;
}

//! Integration weights over one interval for the cubic through four knots
//! at offsets p (in units of h) against the kernel exp(-h*s), s in [0,1].
std::array<double, 4> kernel_weights(const std::array<double, 4>& p,
                                     const std::array<double, 4>& M) {
    std::array<double, 4> w{};
    for (std::size_t j = 0; j < 4; ++j) {
        // expand the Lagrange basis l_j(s) = prod_{k!=j} (s - p_k)/(p_j - p_k)
        std::array<double, 4> poly{1.0, 0.0, 0.0, 0.0};
        double denom = 1.0;
        int deg = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            if (k == j) continue;
            denom *= p[j] - p[k];
            for (int d = deg; d >= 0; --d) {
                poly[static_cast<std::size_t>(d + 1)] += poly[static_cast<std::size_t>(d)];
                poly[static_cast<std::size_t>(d)] *= -p[k];
            }
            ++deg;
        }
        double acc = 0.0;
        for (std::size_t d = 0; d < 4; ++d) acc += poly[d] * M[d];
        w[j] = acc / denom;
    }
    return w;
}

} // namespace

std::vector<double> exp_kernel_backward(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 4) throw std::invalid_argument("exp_kernel_backward: need at least 4 samples");
    const std::array<double, 4> M = exp_moments(h);
    const std::array<double, 4> w_first = kernel_weights({0.0, 1.0, 2.0, 3.0}, M);
    const std::array<double, 4> w_mid = kernel_weights({-1.0, 0.0, 1.0, 2.0}, M);
    const std::array<double, 4> w_last = kernel_weights({-2.0, -1.0, 0.0, 1.0}, M);
    std::vector<double> J(n, 0.0);
    const double decay = std::exp(-h);
    for (std::size_t ii = n - 1; ii > 0; --ii) {
        const std::size_t i = ii - 1; // integrate over [t_i, t_{i+1}]
        std::size_t b;
        const std::array<double, 4>* w;
        if (i == 0) {
            b = 0;
            w = &w_first;
        } else if (i + 2 < n) {
            b = i - 1;
            w = &w_mid;
        } else {
            b = n - 4;
            w = &w_last;
        }
        double panel = 0.0;
        for (std::size_t j = 0; j < 4; ++j) panel += (*w)[j] * f[b + j];
        J[i] = decay * J[i + 1] + h * panel;
    }
    return J;
}

namespace {

struct SweepInputs {
    const TimeGrid* grid = nullptr;
    std::vector<double> inv_c;    // 1/c at knots
    std::vector<double> sigma_sq; // sigma_bar^2 at knots
    std::vector<double> Q_bench;  // benchmark Q at knots
    double rho = 0.0, phi = 0.0;
};

SweepInputs make_inputs(const ModelParams& params, const CostCurve& cost,
                        const CoefficientPaths& benchmark,
                        const std::vector<double>& sigma_bar, double phi) {
    const TimeGrid& grid = benchmark.grid;
    if (sigma_bar.size() != grid.size())
        throw std::invalid_argument("sigma_bar must be sampled on the benchmark grid");
    if (std::fabs(grid.horizon() - params.horizon_T) >
        1e-12 * std::fmax(1.0, params.horizon_T))
        throw std::invalid_argument("grid horizon does not match horizon_T");
    SweepInputs in;
    in.grid = &grid;
    in.rho = params.rho;
    in.phi = phi;
    in.inv_c.resize(grid.size());
    in.sigma_sq.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double c = cost(grid.knots[i], CostCurve::Side::Right);
        if (!(c > 0.0)) throw std::invalid_argument("cost curve returned a non-positive value");
        in.inv_c[i] = 1.0 / c;
        in.sigma_sq[i] = sigma_bar[i] * sigma_bar[i];
    }
    in.Q_bench = benchmark.Q;
    return in;
}

//! One pass of the lagged update: hat_mu from the previous hat_Q, then
//! hat_Q and hat_S from the new hat_mu.
void sweep_once(const SweepInputs& in, const std::vector<double>& Q_prev,
                std::vector<double>& mu, std::vector<double>& Q, std::vector<double>& S) {
    const TimeGrid& grid = *in.grid;
    const std::size_t n = grid.size();
    const double T = grid.horizon();
    const double h = grid.dt();

    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i)
        f[i] = in.phi * in.sigma_sq[i] * (Q_prev[i] + in.Q_bench[i]);
    const std::vector<double> J = exp_kernel_backward(f, h);
    const double qT = Q_prev[n - 1];

    mu.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        mu[i] = std::exp(grid.knots[i] - T) * in.rho * qT + J[i];

    std::vector<double> ratio(n);
    for (std::size_t i = 0; i < n; ++i) ratio[i] = mu[i] * in.inv_c[i];
    Q = quad::cumulative4(ratio, h);
    for (double& v : Q) v = -v;

    const std::vector<double> cum = quad::cumulative4(mu, h);
    S.resize(n);
    for (std::size_t i = 0; i < n; ++i) S[i] = cum[i] - cum[n - 1];
}

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::fmax(s, std::fabs(x));
    return s;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::fmax(s, std::fabs(a[i] - b[i]));
    return s;
}

//! Recover the supply rate and the traded quantity from benchmark paths
//! (m = q + q_tilde at any knot; s from Lambda = P*s + delta/rho at 0).
void recover_m_s(const CoefficientPaths& benchmark, double rho, double& m, double& s) {
    m = benchmark.q[0] + benchmark.q_tilde[0];
    s = (benchmark.Lambda[0] - benchmark.delta[0] / rho) / benchmark.P[0];
}

} // namespace

PerturbationState picard_step(const PerturbationState& prev,
                              const CoefficientPaths& benchmark,
                              const ModelParams& params, const CostCurve& cost) {
    if (!prev.grid.same_as(benchmark.grid))
        throw std::invalid_argument("picard_step: state and benchmark grids differ");
    const SweepInputs in = make_inputs(params, cost, benchmark, prev.sigma_bar, prev.phi);
    const std::size_t n = benchmark.grid.size();

    // Solve the coupled system mu = exp(t-T)*rho*Q(T) + K[Q],
    // Q = -cum(mu/c): for frozen terminal value z = Q(T) iterate the
    // small phi-coupling to a fixed point, then close the affine scalar
    // equation z = G(z) exactly through two evaluations.
    auto solve_frozen = [&](double z, std::vector<double>& mu, std::vector<double>& Q,
                            std::vector<double>& S) {
        std::vector<double> Q_guess(n, 0.0);
        for (int it = 0; it < 500; ++it) {
            // one lagged pass with the terminal coupling frozen at z
            std::vector<double> f(n);
            for (std::size_t i = 0; i < n; ++i)
                f[i] = in.phi * in.sigma_sq[i] * (Q_guess[i] + in.Q_bench[i]);
            const std::vector<double> J = exp_kernel_backward(f, benchmark.grid.dt());
            mu.resize(n);
            const double T = benchmark.grid.horizon();
            for (std::size_t i = 0; i < n; ++i)
                mu[i] = std::exp(benchmark.grid.knots[i] - T) * in.rho * z + J[i];
            std::vector<double> ratio(n);
            for (std::size_t i = 0; i < n; ++i) ratio[i] = mu[i] * in.inv_c[i];
            Q = quad::cumulative4(ratio, benchmark.grid.dt());
            for (double& v : Q) v = -v;
            const double d = sup_diff(Q, Q_guess);
            Q_guess = Q;
            if (d <= 1e-14 * std::fmax(1.0, sup_abs(Q))) {
                const std::vector<double> cum = quad::cumulative4(mu, benchmark.grid.dt());
                S.resize(n);
                for (std::size_t i = 0; i < n; ++i) S[i] = cum[i] - cum[n - 1];
                return;
            }
        }
        throw std::runtime_error(
            "picard_step: inner coupling did not converge; signals the eta <= 0 regime");
    };

    std::vector<double> mu0, Q0, S0, mu1, Q1, S1;
    solve_frozen(0.0, mu0, Q0, S0);
    solve_frozen(1.0, mu1, Q1, S1);
    const double g0 = Q0[n - 1];
    const double slope = Q1[n - 1] - g0;
    const double denom = 1.0 - slope;
    if (std::fabs(denom) < 1e-12)
        throw std::runtime_error(
            "picard_step: terminal coupling is singular; signals the eta <= 0 regime");
    const double z_star = g0 / denom;

    PerturbationState next;
    next.grid = prev.grid;
    next.sigma_bar = prev.sigma_bar;
    next.phi = prev.phi;
    solve_frozen(z_star, next.hat_mu, next.hat_Q, next.hat_S);
    return next;
}

std::pair<PerturbationState, ContractionReport>
run_picard(const ModelParams& params, const CostCurve& cost,
           const CoefficientPaths& benchmark, std::vector<double> sigma_bar, double phi,
           int max_iter, double tol) {
    const SweepInputs in = make_inputs(params, cost, benchmark, sigma_bar, phi);
    const std::size_t n = benchmark.grid.size();

    PerturbationState state;
    state.grid = benchmark.grid;
    state.sigma_bar = std::move(sigma_bar);
    state.phi = phi;
    state.hat_mu.assign(n, 0.0);
    state.hat_Q.assign(n, 0.0);
    state.hat_S.assign(n, 0.0);

    ContractionReport report;
    const double sup_inv_c = sup_abs(in.inv_c);
    const double rtc = params.rho * params.horizon_T * sup_inv_c;
    report.eta = 1.0 - rtc * rtc;
    try {
        report.phi_thresholds = phi_thresholds(params, cost, state.sigma_bar, benchmark, 1.0);
    } catch (const std::exception& e) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        report.phi_thresholds = {nan, nan};
        logging::info("phi thresholds unavailable: %s", e.what());
    }

    double prev_norm = -1.0;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> mu, Q, S;
        sweep_once(in, state.hat_Q, mu, Q, S);
        const double diff = std::fmax(sup_diff(mu, state.hat_mu),
                                      std::fmax(sup_diff(Q, state.hat_Q),
                                                sup_diff(S, state.hat_S)));
        state.hat_mu = std::move(mu);
        state.hat_Q = std::move(Q);
        state.hat_S = std::move(S);
        report.iterate_norms.push_back(diff);
        if (prev_norm > 0.0) report.ratios.push_back(diff / prev_norm);
        prev_norm = diff;
        const double scale = std::fmax(1.0, sup_abs(state.hat_mu));
        if (diff <= tol * scale) {
            report.converged = true;
            break;
        }
        if (!std::isfinite(diff) || diff > 1e150) {
            logging::warn("perturbation iteration is diverging (update %.3g)", diff);
            break;
        }
    }
    return {std::move(state), std::move(report)};
}

namespace {

struct AugmentedPaths {
    std::vector<double> P, Lambda, Q;
};

//! Direct RK4 solve of the phi-augmented coefficient system with
//! deterministic step subdivision for stiff penalty rates.
AugmentedPaths solve_augmented(const ModelParams& params, const CostCurve& cost,
                               const std::vector<double>& sigma_bar, double phi, double m,
                               double s, const TimeGrid& grid) {
    const std::size_t n = grid.size();
    const double rho = params.rho;
    const double h = grid.dt();

    double inv_c_sup = 0.0, sig_sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        inv_c_sup = std::fmax(inv_c_sup, 1.0 / cost(grid.knots[i], CostCurve::Side::Right));
        sig_sup = std::fmax(sig_sup, std::fabs(sigma_bar[i]));
    }
    const double cp_guess = 1.0 + phi / rho * sig_sup * sig_sup;
    const double lip = 2.0 * rho * cp_guess * inv_c_sup + 1.0;
    const int m_sub = std::max(1, static_cast<int>(std::ceil(h * lip / 0.5)));
    const double hs = h / m_sub;

    auto sigma_sq_at = [&](double t) {
        const double sig = interp_linear(grid, sigma_bar, t);
        return sig * sig;
    };
    auto deriv = [&](double t, CostCurve::Side side, double P, double L, double& dP,
                     double& dL) {
        const double c = cost(t, side);
        const double drive = rho * P / c + 1.0;
        dP = P * drive - phi / rho * sigma_sq_at(t);
        dL = L * drive - c * m / rho;
    };

    AugmentedPaths out;
    out.P.assign(n, 0.0);
    out.Lambda.assign(n, 0.0);
    out.P[n - 1] = 1.0;
    out.Lambda[n - 1] = s;
    for (std::size_t i = n - 1; i > 0; --i) {
        double P = out.P[i];
        double L = out.Lambda[i];
        double t = grid.knots[i];
        for (int sub = 0; sub < m_sub; ++sub) {
            const double t_next = (sub + 1 == m_sub) ? grid.knots[i - 1] : t - hs;
            double k1P, k1L, k2P, k2L, k3P, k3L, k4P, k4L;
            deriv(t, sub == 0 ? CostCurve::Side::Left : CostCurve::Side::Right, P, L, k1P, k1L);
            deriv(t - 0.5 * hs, CostCurve::Side::Right, P - 0.5 * hs * k1P, L - 0.5 * hs * k1L,
                  k2P, k2L);
            deriv(t - 0.5 * hs, CostCurve::Side::Right, P - 0.5 * hs * k2P, L - 0.5 * hs * k2L,
                  k3P, k3L);
            deriv(t_next, CostCurve::Side::Right, P - hs * k3P, L - hs * k3L, k4P, k4L);
            P -= hs / 6.0 * (k1P + 2.0 * k2P + 2.0 * k3P + k4P);
            L -= hs / 6.0 * (k1L + 2.0 * k2L + 2.0 * k3L + k4L);
            t = t_next;
        }
        if (!(P > 0.0))
            throw std::runtime_error("phi-augmented coefficient lost positivity");
        out.P[i - 1] = P;
        out.Lambda[i - 1] = L;
    }

    // forward Q with the same subdivision (the damping term keeps it stable)
    out.Q.assign(n, 0.0);
    auto derivQ = [&](double t, CostCurve::Side side, double P, double L, double Q) {
        const double c = cost(t, side);
        return rho * (L - P * Q) / c;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double Q = out.Q[i];
        double t = grid.knots[i];
        for (int sub = 0; sub < m_sub; ++sub) {
            const double t_next = (sub + 1 == m_sub) ? grid.knots[i + 1] : t + hs;
            const double tm = 0.5 * (t + t_next);
            // P and Lambda interpolated within the interval
            auto PL = [&](double tt, double& P, double& L) {
                P = interp_linear(grid, out.P, tt);
                L = interp_linear(grid, out.Lambda, tt);
            };
            double P1, L1, Pm, Lm, P2, L2;
            PL(t, P1, L1);
            PL(tm, Pm, Lm);
            PL(t_next, P2, L2);
            const double k1 = derivQ(t, CostCurve::Side::Right, P1, L1, Q);
            const double k2 = derivQ(tm, CostCurve::Side::Right, Pm, Lm, Q + 0.5 * hs * k1);
            const double k3 = derivQ(tm, CostCurve::Side::Right, Pm, Lm, Q + 0.5 * hs * k2);
            const double k4 =
                derivQ(t_next, sub + 1 == m_sub ? CostCurve::Side::Left : CostCurve::Side::Right,
                       P2, L2, Q + hs * k3);
            Q += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = t_next;
        }
        out.Q[i + 1] = Q;
    }
    return out;
}

} // namespace

LemmaBounds lemma_bounds(const ModelParams& params, const CostCurve& cost,
                         const std::vector<double>& sigma_bar, double m, double s,
                         const TimeGrid& grid) {
    if (sigma_bar.size() != grid.size())
        throw std::invalid_argument("sigma_bar must be sampled on the grid");
    const double rho = params.rho;
    const double T = grid.horizon();
    const double phi = params.phi;

    double c_sup = 0.0, inv_c_sup = 0.0, sig_sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double c = cost(grid.knots[i], CostCurve::Side::Right);
        c_sup = std::fmax(c_sup, c);
        inv_c_sup = std::fmax(inv_c_sup, 1.0 / c);
        sig_sup = std::fmax(sig_sup, std::fabs(sigma_bar[i]));
    }

    LemmaBounds out;
    out.C_P = 1.0 + phi / rho * sig_sup * sig_sup;
    out.C_Lambda = 2.0 * std::fabs(s) + 4.0 * c_sup * std::fabs(m) * T / rho;
    out.h_Q = rho * inv_c_sup * out.C_Lambda * T;

    const AugmentedPaths aug = solve_augmented(params, cost, sigma_bar, phi, m, s, grid);
    out.sup_P = sup_abs(aug.P);
    out.sup_abs_Lambda = sup_abs(aug.Lambda);
    out.sup_abs_Q = sup_abs(aug.Q);
    const double slack = 1.0 + 1e-10;
    out.within_bounds = out.sup_P <= out.C_P * slack &&
                        out.sup_abs_Lambda <= out.C_Lambda * slack &&
                        out.sup_abs_Q <= out.h_Q * slack;

    const AugmentedPaths base = solve_augmented(params, cost, sigma_bar, 0.0, m, s, grid);
    out.monotone_in_phi = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (aug.P[i] < base.P[i] - 1e-12) {
            out.monotone_in_phi = false;
            break;
        }
    }
    return out;
}

std::pair<double, double> phi_thresholds(const ModelParams& params, const CostCurve& cost,
                                         const std::vector<double>& sigma_bar,
                                         const CoefficientPaths& benchmark, double R) {
    const TimeGrid& grid = benchmark.grid;
    if (sigma_bar.size() != grid.size())
        throw std::invalid_argument("sigma_bar must be sampled on the benchmark grid");
    const double rho = params.rho;
    const double T = grid.horizon();

    double c_sup = 0.0, inv_c_sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double c = cost(grid.knots[i], CostCurve::Side::Right);
        c_sup = std::fmax(c_sup, c);
        inv_c_sup = std::fmax(inv_c_sup, 1.0 / c);
    }
    const double rtc = rho * T * inv_c_sup;
    const double eta = 1.0 - rtc * rtc;
    if (eta <= 0.0)
        throw std::domain_error("structural condition violated: rho*T*sup(1/c) >= 1");

    double m = 0.0, s = 0.0;
    recover_m_s(benchmark, rho, m, s);

    std::vector<double> sig_sq(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) sig_sq[i] = sigma_bar[i] * sigma_bar[i];
    const double sig_norm_sq = quad::integral4(sig_sq, grid.dt());
    const double sig_norm = std::sqrt(std::fmax(sig_norm_sq, 0.0));

    const double R_bar_sq = sig_norm_sq + R * R;
    const double R_tilde = R + sig_norm;
    const double lambda_sup = sup_abs(benchmark.Lambda);
    const double h_Q0 = rho * inv_c_sup * lambda_sup * T;
    const double phi1 = eta * R / (16.0 * T * h_Q0 * R_bar_sq);

    const double C_Lambda = 2.0 * std::fabs(s) + 4.0 * c_sup * std::fabs(m) * T / rho;
    const double h_Q = rho * inv_c_sup * C_Lambda * T;
    const double rc2T2 = rho * inv_c_sup * rho * inv_c_sup * T * T;
    const double C_tilde = 4.0 * C_Lambda * C_Lambda * rc2T2;
    const double C_bar = 2.0 * rc2T2 * (C_tilde + rc2T2 * C_Lambda * C_Lambda);
    const double root_C_bar = std::sqrt(C_bar);

    // kappa(phi) = B + 2C = b*phi + a*phi^2 with the coefficients below;
    // phi_2 solves kappa = 1/(4T) in closed form
    const double b = 4.0 * R_tilde * (root_C_bar + h_Q);
    const double a = 16.0 * root_C_bar * R_tilde * R_tilde * R_tilde / rho;
    const double rhs = 1.0 / (4.0 * T);
    double phi2;
    if (a > 0.0) {
        phi2 = (-b + std::sqrt(b * b + 4.0 * a * rhs)) / (2.0 * a);
    } else if (b > 0.0) {
        phi2 = rhs / b;
    } else {
        phi2 = std::numeric_limits<double>::infinity();
    }
    return {phi1, phi2};
}

} // namespace spotforward
