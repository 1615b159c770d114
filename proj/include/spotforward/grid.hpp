#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace spotforward {

//! Uniform time grid on [0,T] with n_steps intervals (n_steps+1 knots).
struct TimeGrid {
    int n_steps = 0;
    std::vector<double> knots;

    static TimeGrid uniform(double T, int n_steps);

    double horizon() const { return knots.empty() ? 0.0 : knots.back(); }
    double dt() const { return n_steps > 0 ? horizon() / n_steps : 0.0; }
    std::size_t size() const { return knots.size(); }

    bool same_as(const TimeGrid& other) const {
        return n_steps == other.n_steps && knots == other.knots;
    }
};

inline TimeGrid TimeGrid::uniform(double T, int n_steps) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon_T must be strictly positive");
    if (n_steps < 2) throw std::invalid_argument("grid.n_steps must be at least 2");
    TimeGrid g;
    g.n_steps = n_steps;
    g.knots.resize(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i)
        g.knots[static_cast<std::size_t>(i)] = T * static_cast<double>(i) / n_steps;
    g.knots.back() = T;
    return g;
}

//! Linear interpolation of knot values at time t (clamped to [0,T]).
inline double interp_linear(const TimeGrid& grid, const std::vector<double>& values, double t) {
    if (values.size() != grid.size())
        throw std::invalid_argument("interp_linear: values/grid size mismatch");
    const double T = grid.horizon();
    if (t <= 0.0) return values.front();
    if (t >= T) return values.back();
    const double h = grid.dt();
    const double x = t / h;
    auto i = static_cast<std::size_t>(x);
    if (i >= values.size() - 1) return values.back();
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

namespace quad {

//! Cumulative integral of knot samples on a uniform grid, 4th order.
//! Each interval is integrated with the cubic through the four nearest
//! knots; out[i] approximates the integral from 0 to knots[i].
inline std::vector<double> cumulative4(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 4) throw std::invalid_argument("cumulative4: need at least 4 samples");
    std::vector<double> out(n, 0.0);
    // weights for the cubic through f[b..b+3] integrated over one interval
    static constexpr double w_first[4] = {3.0 / 8.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0};
    static constexpr double w_mid[4] = {-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0};
    static constexpr double w_last[4] = {1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 3.0 / 8.0};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double panel;
        if (i == 0) {
            panel = w_first[0] * f[0] + w_first[1] * f[1] + w_first[2] * f[2] + w_first[3] * f[3];
        } else if (i + 2 < n) {
            panel = w_mid[0] * f[i - 1] + w_mid[1] * f[i] + w_mid[2] * f[i + 1] + w_mid[3] * f[i + 2];
        } else {
            panel = w_last[0] * f[n - 4] + w_last[1] * f[n - 3] + w_last[2] * f[n - 2] + w_last[3] * f[n - 1];
        }
        out[i + 1] = out[i] + h * panel;
    }
    return out;
}

//! Total integral of knot samples (4th order).
inline double integral4(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 4) throw std::invalid_argument("integral4: need at least 4 samples");
    static constexpr double w_first[4] = {3.0 / 8.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0};
    static constexpr double w_mid[4] = {-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0};
    static constexpr double w_last[4] = {1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 3.0 / 8.0};
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (i == 0) {
            acc += w_first[0] * f[0] + w_first[1] * f[1] + w_first[2] * f[2] + w_first[3] * f[3];
        } else if (i + 2 < n) {
            acc += w_mid[0] * f[i - 1] + w_mid[1] * f[i] + w_mid[2] * f[i + 1] + w_mid[3] * f[i + 2];
        } else {
            acc += w_last[0] * f[n - 4] + w_last[1] * f[n - 3] + w_last[2] * f[n - 2] + w_last[3] * f[n - 1];
        }
    }
    return acc * h;
}

//! Exponentially weighted cumulative integral in scaled form:
//!   out[i] = exp(-L[i]) * integral_0^{t_i} exp(L(s)) f(s) ds.
//! Computed with per-interval exponent differences so it stays finite even
//! when L grows far beyond the overflow threshold of exp.
inline std::vector<double> scaled_exp_cumulative4(const std::vector<double>& L,
                                                  const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 4 || L.size() != n)
        throw std::invalid_argument("scaled_exp_cumulative4: bad sizes");
    std::vector<double> out(n, 0.0);
    static constexpr double w_first[4] = {3.0 / 8.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0};
    static constexpr double w_mid[4] = {-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0};
    static constexpr double w_last[4] = {1.0 / 24.0, -5.0 / 24.0, 19.0 / 24.0, 3.0 / 8.0};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double Lref = L[i + 1];
        std::size_t b;
        const double* w;
        if (i == 0) {
            b = 0; w = w_first;
        } else if (i + 2 < n) {
            b = i - 1; w = w_mid;
        } else {
            b = n - 4; w = w_last;
        }
        double panel = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            panel += w[j] * std::exp(L[b + j] - Lref) * f[b + j];
        out[i + 1] = std::exp(L[i] - Lref) * out[i] + h * panel;
    }
    return out;
}

//! Composite Simpson over an odd number of equally spaced samples.
inline double simpson(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("simpson: need odd sample count >= 3");
    double acc = f[0] + f[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
    return acc * h / 3.0;
}

} // namespace quad
} // namespace spotforward
