#include "spotforward/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace spotforward {

CostCurve CostCurve::constant(double level) {
    if (!(level > 0.0)) throw std::invalid_argument("cost level must be strictly positive");
    CostCurve c;
    c.eval_ = [level](double, Side) { return level; };
    return c;
}

CostCurve CostCurve::piecewise(std::vector<double> breaks, std::vector<double> levels) {
    if (levels.size() != breaks.size() + 1)
        throw std::invalid_argument("piecewise cost: need one more level than breaks");
    if (!std::is_sorted(breaks.begin(), breaks.end()))
        throw std::invalid_argument("piecewise cost: breaks must be sorted");
    for (double v : levels)
        if (!(v > 0.0)) throw std::invalid_argument("cost level must be strictly positive");
    CostCurve c;
    c.eval_ = [breaks = std::move(breaks), levels = std::move(levels)](double t, Side side) {
        // index of the regime active at t; at a break, Side picks the limit
        auto it = (side == Side::Right)
                      ? std::upper_bound(breaks.begin(), breaks.end(), t)
                      : std::lower_bound(breaks.begin(), breaks.end(), t);
        return levels[static_cast<std::size_t>(it - breaks.begin())];
    };
    return c;
}

CostCurve CostCurve::sampled(TimeGrid grid, std::vector<double> values) {
    if (values.size() != grid.size())
        throw std::invalid_argument("sampled cost: values/grid size mismatch");
    for (double v : values)
        if (!(v > 0.0)) throw std::invalid_argument("cost level must be strictly positive");
    CostCurve c;
    c.eval_ = [grid = std::move(grid), values = std::move(values)](double t, Side) {
        return interp_linear(grid, values, t);
    };
    return c;
}

CostCurve CostCurve::smooth(std::function<double(double)> f) {
    CostCurve c;
    c.eval_ = [f = std::move(f)](double t, Side) { return f(t); };
    return c;
}

namespace {

struct UW {
    std::vector<double> u; // 1/P
    std::vector<double> w; // delta/P
};

/**
 * Joint backward integration of the reciprocal system
 *   u' = -u - rho/c(t),   u(T) = 1,
 *   w' = -c(t)*m*u,       w(T) = 0,
 * with classical RK4 over each grid interval. Both equations are linear
 * with bounded coefficients, so no step-size control is needed.
 */
UW solve_uw(const CostCurve& cost, double m, double rho, const TimeGrid& grid) {
    const std::size_t n = grid.size();
    UW out;
    out.u.assign(n, 0.0);
    out.w.assign(n, 0.0);
    out.u[n - 1] = 1.0;
    out.w[n - 1] = 0.0;
    const double h = grid.dt();

    // the w-equation has no w term on the right-hand side, so the stages
    // only need the running u value
    auto deriv = [&](double t, CostCurve::Side side, double u, double& du, double& dw) {
        const double c = cost(t, side);
        if (!(c > 0.0))
            throw std::invalid_argument("cost curve returned a non-positive value");
        du = -u - rho / c;
        dw = -c * m * u;
    };

    for (std::size_t i = n - 1; i > 0; --i) {
        const double t1 = grid.knots[i];
        const double t0 = grid.knots[i - 1];
        const double tm = 0.5 * (t0 + t1);
        const double u0 = out.u[i];
        const double w0 = out.w[i];
        double k1u, k1w, k2u, k2w, k3u, k3w, k4u, k4w;
        // the step lives in [t0, t1]: use the left limit at t1 and the
        // right limit at t0 so knot-located cost jumps stay on-side
        deriv(t1, CostCurve::Side::Left, u0, k1u, k1w);
        deriv(tm, CostCurve::Side::Right, u0 - 0.5 * h * k1u, k2u, k2w);
        deriv(tm, CostCurve::Side::Right, u0 - 0.5 * h * k2u, k3u, k3w);
        deriv(t0, CostCurve::Side::Right, u0 - h * k3u, k4u, k4w);
        out.u[i - 1] = u0 - h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        out.w[i - 1] = w0 - h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }
    return out;
}

} // namespace

std::vector<double> solve_riccati_backward(const CostCurve& cost, double rho,
                                           const TimeGrid& grid) {
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be strictly positive");
    UW uw = solve_uw(cost, 0.0, rho, grid);
    std::vector<double> P(grid.size());
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (!(uw.u[i] >= 1.0))
            throw std::runtime_error("reciprocal coefficient left its invariant range");
        P[i] = 1.0 / uw.u[i];
    }
    return P;
}

std::vector<double> solve_delta_backward(const CostCurve& cost,
                                         const std::vector<double>& P_path, double m,
                                         double rho, const TimeGrid& grid) {
    if (P_path.size() != grid.size())
        throw std::invalid_argument("solve_delta_backward: P_path/grid size mismatch");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be strictly positive");
    UW uw = solve_uw(cost, m, rho, grid);
    std::vector<double> delta(grid.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double P = 1.0 / uw.u[i];
        if (std::fabs(P - P_path[i]) > 1e-12 * std::fmax(1.0, std::fabs(P_path[i])) + 1e-300)
            throw std::invalid_argument(
                "solve_delta_backward: P_path is inconsistent with the cost curve");
        delta[i] = uw.w[i] * P;
    }
    return delta;
}

CoefficientPaths assemble_paths(const std::vector<double>& P_path,
                                const std::vector<double>& delta_path, double s,
                                const CostCurve& cost, double m, double rho,
                                const TimeGrid& grid) {
    const std::size_t n = grid.size();
    if (P_path.size() != n || delta_path.size() != n)
        throw std::invalid_argument("assemble_paths: path/grid size mismatch");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be strictly positive");

    CoefficientPaths out;
    out.grid = grid;
    out.P = P_path;
    out.delta = delta_path;
    out.Lambda.resize(n);
    out.H.resize(n);
    out.Q.resize(n);
    out.mu.resize(n);
    out.q.resize(n);
    out.q_tilde.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        out.Lambda[i] = P_path[i] * s + delta_path[i] / rho;
        // along solutions, (log P)' = rho*P/c + 1, so the cumulative is exact
        out.H[i] = std::log(P_path[i] / P_path[0]);
    }

    // Q(t) = exp(-A(t)) * integral_0^t exp(A) * rho*Lambda/c ds with the
    // integrating factor A = H - t; evaluated in exponent-difference form.
    std::vector<double> A(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = cost(grid.knots[i], CostCurve::Side::Right);
        A[i] = out.H[i] - grid.knots[i];
        f[i] = rho * out.Lambda[i] / c;
    }
    out.Q = quad::scaled_exp_cumulative4(A, f, grid.dt());

    for (std::size_t i = 0; i < n; ++i) {
        const double c = cost(grid.knots[i], CostCurve::Side::Right);
        out.q[i] = rho * (out.Lambda[i] - P_path[i] * out.Q[i]) / c;
        out.q_tilde[i] = m - out.q[i];
        out.mu[i] = c * out.q_tilde[i];
    }
    return out;
}

double alpha_T(const std::vector<double>& P_path, const CostCurve& cost, double rho,
               const TimeGrid& grid) {
    (void)cost; // the endpoint identity needs only P(0); kept for symmetry
    if (P_path.size() != grid.size())
        throw std::invalid_argument("alpha_T: P_path/grid size mismatch");
    if (!(rho > 0.0)) throw std::invalid_argument("rho must be strictly positive");
    // 1 - rho*alpha(t) = exp(t - H(t)) and H(T) = -log P(0) give the exact
    // endpoint form below; no quadrature error enters.
    return (1.0 - std::exp(grid.horizon()) * P_path[0]) / rho;
}

} // namespace spotforward
