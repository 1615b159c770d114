#include "spotforward/jump.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "spotforward/closed_forms.hpp"

namespace spotforward {

namespace {

void check_inputs(double c_normal, double c_stress, double lambda, double rho) {
    if (!(c_normal > 0.0)) throw std::invalid_argument("c_normal must be strictly positive");
    if (!(c_stress > 0.0)) throw std::invalid_argument("c_stress must be strictly positive");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be strictly positive");
}

struct VW {
    std::vector<double> v; // 1/P_normal
    std::vector<double> w; // delta_normal / P_normal
};

VW solve_vw(double c_normal, double c_stress, double lambda, double m, double rho,
            const TimeGrid& grid) {
    const std::size_t n = grid.size();
    const double T = grid.horizon();
    const double h = grid.dt();

    // deterministic step subdivision: keep (sub-step) * (Lipschitz bound)
    // below 1/2 so RK4 stays in its stability region even at extreme
    // lambda / cost-ratio corners probed by the calibrator
    const double ratio = std::fmax(c_stress / c_normal, 1.0);
    const double lip = 2.0 * lambda * ratio * std::exp(T) + lambda + 1.0;
    const int m_sub = std::max(1, static_cast<int>(std::ceil(h * lip / 0.5)));
    const double hs = h / m_sub;

    auto deriv = [&](double t, double v, double w, double& dv, double& dw) {
        const double pbar = p_closed(t, c_stress, rho, T);
        const double dbar = delta_closed(t, c_stress, m, rho, T);
        dv = lambda * pbar * v * v - (1.0 + lambda) * v - rho / c_normal;
        dw = lambda * pbar * v * w - v * (lambda * dbar + c_normal * m);
    };

    VW out;
    out.v.assign(n, 0.0);
    out.w.assign(n, 0.0);
    out.v[n - 1] = 1.0;
    for (std::size_t i = n - 1; i > 0; --i) {
        double v = out.v[i];
        double w = out.w[i];
        double t = grid.knots[i];
        for (int s = 0; s < m_sub; ++s) {
            double k1v, k1w, k2v, k2w, k3v, k3w, k4v, k4w;
            deriv(t, v, w, k1v, k1w);
            deriv(t - 0.5 * hs, v - 0.5 * hs * k1v, w - 0.5 * hs * k1w, k2v, k2w);
            deriv(t - 0.5 * hs, v - 0.5 * hs * k2v, w - 0.5 * hs * k2w, k3v, k3w);
            const double t_next = (s + 1 == m_sub) ? grid.knots[i - 1] : t - hs;
            deriv(t_next, v - hs * k3v, w - hs * k3w, k4v, k4w);
            v -= hs / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            w -= hs / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            t = t_next;
        }
        if (!(v > 0.5))
            throw std::runtime_error("normal-state solve left its invariant range");
        out.v[i - 1] = v;
        out.w[i - 1] = w;
    }
    return out;
}

//! Quadrature-free path quantities of the normal state.
struct NormalAux {
    std::vector<double> v;      // 1/P_normal
    std::vector<double> G;      // cumulative of P_stress * v
    std::vector<double> H0;     // cumulative of rho*P_normal/c_normal + 1
    std::vector<double> beta_n; // pathwise beta along the normal state
};

NormalAux build_normal_aux(const JumpCoefficients& jc) {
    const std::size_t n = jc.grid.size();
    const double h = jc.grid.dt();
    NormalAux aux;
    aux.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) aux.v[i] = 1.0 / jc.P_normal[i];

    std::vector<double> pv(n);
    for (std::size_t i = 0; i < n; ++i) pv[i] = jc.P_stress[i] * aux.v[i];
    aux.G = quad::cumulative4(pv, h);

    // rho*P/c + 1 = -(log v)' + lambda*(P_stress*v - 1) along the solution
    aux.H0.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = jc.grid.knots[i];
        aux.H0[i] = jc.lambda * (aux.G[i] - t) + std::log(aux.v[0] / aux.v[i]);
    }

    // beta_n solves beta' = (delta - rho*P*beta)/c forward from 0; in the
    // integrating-factor form below all exponentials appear as bounded
    // per-interval differences, so no quadrature of stiff integrands and
    // no overflow even when the exponent range is in the thousands.
    std::vector<double> L(n), src(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = jc.grid.knots[i];
        L[i] = jc.lambda * (aux.G[i] - t) - t;
        src[i] = jc.lambda * jc.delta_stress[i] + jc.c_normal * jc.m_rate -
                 jc.lambda * pv[i] * jc.delta_normal[i];
    }
    const std::vector<double> R = quad::scaled_exp_cumulative4(L, src, h);
    aux.beta_n.resize(n);
    const double delta0 = jc.delta_normal[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double S = R[i] - std::exp(-L[i]) * delta0;
        aux.beta_n[i] = aux.v[i] / jc.rho * (jc.delta_normal[i] + S);
    }
    aux.beta_n[0] = 0.0;
    return aux;
}

//! Exact decay factor of the post-event segment: exp(T-u) * P_stress(u).
double stress_decay(const JumpCoefficients& jc, double u) {
    const double T = jc.grid.horizon();
    const double g = std::exp(T - u);
    return g / ((1.0 + jc.rho / jc.c_stress) * g - jc.rho / jc.c_stress);
}

double beta_terminal_given_jump(const JumpCoefficients& jc, const NormalAux& aux, double u) {
    const double T = jc.grid.horizon();
    const double pi = stress_decay(jc, u);
    const double beta_pre = interp_linear(jc.grid, aux.beta_n, u);
    const double tail = beta_closed(T, jc.c_stress, jc.m_rate, jc.rho, T) -
                        pi * beta_closed(u, jc.c_stress, jc.m_rate, jc.rho, T);
    return pi * beta_pre + tail;
}

double alpha_terminal_given_jump(const JumpCoefficients& jc, const NormalAux& aux, double u) {
    const double pi = stress_decay(jc, u);
    const double H0u = interp_linear(jc.grid, aux.H0, u);
    const double alpha_pre = (1.0 - std::exp(u - H0u)) / jc.rho;
    return pi * alpha_pre + (1.0 - pi) / jc.rho;
}

/**
 * Simpson + atom scheme shared by expected_beta / expected_alpha.
 * Integrates lambda*exp(-lambda*u)*g(u) over [0,T] on grid-aligned nodes
 * (coarsened to ~1024 intervals for large grids), swaps the sub-interval
 * next to maturity for a finer Simpson panel to resolve the boundary
 * layer of g there, and adds exp(-lambda*T)*g_no_event for the no-event
 * atom.
 */
template <typename TerminalFn>
double expected_terminal(const JumpCoefficients& jc, const TerminalFn& g, double g_no_event) {
    const double T = jc.grid.horizon();
    const double lam = jc.lambda;
    const double atom = std::exp(-lam * T) * g_no_event;
    if (lam == 0.0) return atom;

    const int n = jc.grid.n_steps;
    if (n % 2 != 0)
        throw std::invalid_argument("expected_beta: grid.n_steps must be even");
    const int stride = (n % 1024 == 0 && n > 1024) ? n / 1024 : 1;
    const int n_coarse = n / stride;
    const double hc = T / n_coarse;

    // boundary-layer width near maturity: O(c/rho), resolved separately
    const double h = jc.grid.dt();
    const double eps = std::fmin(
        T / 4.0, std::fmax(60.0 * (jc.c_stress + jc.c_normal) / (jc.rho + 1.0), 8.0 * h));
    int k_tail = std::max(2, static_cast<int>(std::ceil(eps / hc)));
    k_tail = std::min(k_tail, n_coarse / 2);
    if ((n_coarse - k_tail) % 2 != 0) ++k_tail;

    auto weighted = [&](double u, double gu) { return lam * std::exp(-lam * u) * gu; };

    // main panel on coarse nodes [0 .. n_coarse - k_tail]
    std::vector<double> f(static_cast<std::size_t>(n_coarse - k_tail) + 1);
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double u = jc.grid.knots[j * static_cast<std::size_t>(stride)];
        f[j] = weighted(u, g(u));
    }
    double total = quad::simpson(f, hc);

    // refined panel on [T - k_tail*hc, T]
    const double u_split = jc.grid.knots[static_cast<std::size_t>(n_coarse - k_tail) *
                                         static_cast<std::size_t>(stride)];
    constexpr int n_fine = 256;
    const double hf = (T - u_split) / n_fine;
    std::vector<double> ft(n_fine + 1);
    for (int j = 0; j <= n_fine; ++j) {
        const double u = (j == n_fine) ? T : u_split + hf * j;
        ft[static_cast<std::size_t>(j)] = weighted(u, g(u));
    }
    total += quad::simpson(ft, hf);
    return total + atom;
}

} // namespace

std::pair<std::vector<double>, std::vector<double>>
stressed_coefficients(double c_stress, double m, double rho, const TimeGrid& grid) {
    check_inputs(1.0, c_stress, 0.0, rho);
    const double T = grid.horizon();
    std::vector<double> P(grid.size()), d(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        P[i] = p_closed(grid.knots[i], c_stress, rho, T);
        d[i] = delta_closed(grid.knots[i], c_stress, m, rho, T);
    }
    return {std::move(P), std::move(d)};
}

std::pair<std::vector<double>, std::vector<double>>
normal_coefficients(double c_normal, double c_stress, double lambda, double m, double rho,
                    const TimeGrid& grid) {
    check_inputs(c_normal, c_stress, lambda, rho);
    VW vw = solve_vw(c_normal, c_stress, lambda, m, rho, grid);
    std::vector<double> P(grid.size()), d(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        P[i] = 1.0 / vw.v[i];
        d[i] = vw.w[i] * P[i];
    }
    return {std::move(P), std::move(d)};
}

JumpCoefficients solve_jump_model(double c_normal, double c_stress, double lambda,
                                  double m, double rho, const TimeGrid& grid) {
    JumpCoefficients jc;
    jc.grid = grid;
    jc.lambda = lambda;
    jc.c_normal = c_normal;
    jc.c_stress = c_stress;
    jc.m_rate = m;
    jc.rho = rho;
    auto stressed = stressed_coefficients(c_stress, m, rho, grid);
    jc.P_stress = std::move(stressed.first);
    jc.delta_stress = std::move(stressed.second);
    auto normal = normal_coefficients(c_normal, c_stress, lambda, m, rho, grid);
    jc.P_normal = std::move(normal.first);
    jc.delta_normal = std::move(normal.second);
    return jc;
}

ConditionalPath conditional_path(const JumpCoefficients& coeffs,
                                 std::optional<double> jump_time) {
    const TimeGrid& grid = coeffs.grid;
    const double T = grid.horizon();
    if (jump_time && (*jump_time < 0.0 || *jump_time > T))
        throw std::invalid_argument("jump_time must lie in [0, horizon_T]");

    NormalAux aux = build_normal_aux(coeffs);
    ConditionalPath out;
    out.jump_time = jump_time;
    const std::size_t n = grid.size();
    out.realized_cost.resize(n);
    out.realized_P.resize(n);
    out.realized_delta.resize(n);
    out.realized_H.resize(n);

    const double u = jump_time ? *jump_time : std::numeric_limits<double>::infinity();
    // cumulative at the event time; the post-event part continues with the
    // stressed decomposition H(t) = H(u) + log(P_stress(t)/P_stress(u))
    double H_at_u = 0.0, P_stress_u = 1.0;
    if (jump_time) {
        H_at_u = interp_linear(grid, aux.H0, u);
        P_stress_u = p_closed(u, coeffs.c_stress, coeffs.rho, T);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid.knots[i];
        if (t < u) {
            out.realized_cost[i] = coeffs.c_normal;
            out.realized_P[i] = coeffs.P_normal[i];
            out.realized_delta[i] = coeffs.delta_normal[i];
            out.realized_H[i] = aux.H0[i];
        } else {
            out.realized_cost[i] = coeffs.c_stress;
            out.realized_P[i] = coeffs.P_stress[i];
            out.realized_delta[i] = coeffs.delta_stress[i];
            out.realized_H[i] = H_at_u + std::log(coeffs.P_stress[i] / P_stress_u);
        }
    }
    return out;
}

double conditional_beta(const ConditionalPath& path, const JumpCoefficients& coeffs) {
    NormalAux aux = build_normal_aux(coeffs);
    if (!path.jump_time) return aux.beta_n.back();
    return beta_terminal_given_jump(coeffs, aux, *path.jump_time);
}

double conditional_alpha(const ConditionalPath& path, const JumpCoefficients& coeffs) {
    NormalAux aux = build_normal_aux(coeffs);
    if (!path.jump_time) {
        return (1.0 - std::exp(coeffs.grid.horizon() - aux.H0.back())) / coeffs.rho;
    }
    return alpha_terminal_given_jump(coeffs, aux, *path.jump_time);
}

double expected_beta(const JumpCoefficients& coeffs) {
    NormalAux aux = build_normal_aux(coeffs);
    return expected_terminal(
        coeffs, [&](double u) { return beta_terminal_given_jump(coeffs, aux, u); },
        aux.beta_n.back());
}

double expected_alpha(const JumpCoefficients& coeffs) {
    NormalAux aux = build_normal_aux(coeffs);
    const double no_event =
        (1.0 - std::exp(coeffs.grid.horizon() - aux.H0.back())) / coeffs.rho;
    return expected_terminal(
        coeffs, [&](double u) { return alpha_terminal_given_jump(coeffs, aux, u); },
        no_event);
}

} // namespace spotforward
