#pragma once

// Scalar reduction of the implicit gBBKS update. With c_m = y_m^n and
// d_m = dt * f_m for the active indices, the product term tau solves
//
//     G(tau) = (prod_m (c_m + d_m tau) / sigma_m)^r - tau = 0
//
// on (0, tau_max), tau_max = min_m c_m / (-d_m). G(0) > 0, G(tau_max) < 0 and
// G is strictly decreasing, so plain bisection always brackets the root.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "pdsint/errors.hpp"

namespace pdsint {

struct TauSolution {
    double tau = 1.0;
    double lower = 1.0;  // final bracket
    double upper = 1.0;
    double residual = 0.0;
    int iterations = 0;
};

struct TauSolverOptions {
    double interval_tol = 1e-15;  // relative to tau_max
    double residual_tol = 1e-14;
    int max_iterations = 200;
};

namespace detail {

inline double tau_product(std::span<const double> c, std::span<const double> d, std::span<const double> sigma,
                          double r, double tau) {
    double p = 1.0;
    for (std::size_t m = 0; m < c.size(); ++m) p *= (c[m] + d[m] * tau) / sigma[m];
    if (p <= 0.0) return 0.0;
    return r == 1.0 ? p : std::pow(p, r);
}

}  // namespace detail

/// Residual G(tau) of the scalar gBBKS equation.
inline double tau_residual(std::span<const double> c, std::span<const double> d, std::span<const double> sigma,
                           double r, double tau) {
    return detail::tau_product(c, d, sigma, r, tau) - tau;
}

/// Solves for tau by bisection. An empty index set gives tau = 1.
inline TauSolution solve_tau(std::span<const double> c, std::span<const double> d, std::span<const double> sigma,
                             double r, const TauSolverOptions& opt = {}) {
    if (c.size() != d.size() || c.size() != sigma.size()) throw ModelError("solve_tau: size mismatch");
    TauSolution sol;
    if (c.empty()) return sol;
    if (!(r > 0.0) || !std::isfinite(r)) throw ModelError("solve_tau: exponent r must be positive");
    double tau_max = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < c.size(); ++m) {
        if (!(c[m] > 0.0) || !std::isfinite(c[m])) throw ModelError("solve_tau: c_m must be positive");
        if (!(d[m] < 0.0) || !std::isfinite(d[m])) throw ModelError("solve_tau: d_m must be negative");
        if (!(sigma[m] > 0.0) || !std::isfinite(sigma[m])) throw ModelError("solve_tau: sigma_m must be positive");
        tau_max = std::min(tau_max, c[m] / -d[m]);
    }

    double lo = 0.0;
    double hi = tau_max;
    const double width_tol = opt.interval_tol * tau_max;
    int it = 0;
    // A large tau_max (tiny d) makes the width test alone too coarse, so the
    // residual test must pass as well.
    auto done = [&] {
        if (hi - lo > width_tol) return false;
        return std::min(std::abs(tau_residual(c, d, sigma, r, lo)), std::abs(tau_residual(c, d, sigma, r, hi))) <=
               opt.residual_tol;
    };
    while (!done() && it < opt.max_iterations) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // adjacent doubles
        ++it;
        if (tau_residual(c, d, sigma, r, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double g_lo = tau_residual(c, d, sigma, r, lo);
    const double g_hi = tau_residual(c, d, sigma, r, hi);
    // hi == tau_max would zero a component; prefer lo there.
    const bool take_hi = hi < tau_max && std::abs(g_hi) < std::abs(g_lo);
    sol.tau = take_hi ? hi : lo;
    sol.residual = take_hi ? g_hi : g_lo;
    sol.lower = lo;
    sol.upper = hi;
    sol.iterations = it;

    const bool adjacent = std::nextafter(lo, hi) >= hi;
    if (!(sol.tau > 0.0) || (!adjacent && std::abs(sol.residual) > opt.residual_tol))
        throw NumericalError("solve_tau: no convergence, bracket [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
    return sol;
}

}  // namespace pdsint
