#pragma once

// Linear stability toolkit: stability functions, critical step sizes, the
// M * trace(S-) certificate for GeCo1, Jacobians of the step maps at steady
// states and their spectral classification.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pdsint/errors.hpp"
#include "pdsint/linalg.hpp"
#include "pdsint/pds.hpp"
#include "pdsint/phi.hpp"
#include "pdsint/schemes.hpp"

namespace pdsint {

/// R(z) of each scheme applied to y' = lambda y, z = dt lambda. The GeCo
/// variants also depend on dt_trace = dt * trace(S-).
inline Complex stability_value(SchemeId id, Complex z, double dt_trace = 0.0) {
    switch (id) {
        case SchemeId::euler:
        case SchemeId::gbbks1: return 1.0 + z;
        case SchemeId::heun:
        case SchemeId::gbbks2: return 1.0 + z + 0.5 * z * z;
        case SchemeId::geco1: return 1.0 + z * phi(dt_trace);
        case SchemeId::geco2: return 1.0 + z + 0.5 * z * z * phi(dt_trace);
    }
    throw ModelError("stability_value: unknown scheme");
}

namespace detail {

/// Eigenvalues of A with the numerically zero ones removed.
inline std::vector<Complex> nonzero_eigenvalues(const Matrix& a) {
    const Spectrum s = eigenvalues(a);
    const double tol = 1e-7 * std::max(a.norm_fro(), std::numeric_limits<double>::min());
    std::vector<Complex> out;
    for (const Complex& z : s.values)
        if (std::abs(z) > tol) out.push_back(z);
    return out;
}

}  // namespace detail

struct CriticalStep {
    double dt_star = 0.0;  // meaningless when unconditional
    bool unconditional = false;
    Complex binding_eigenvalue{0.0, 0.0};
    double bracket_width = 0.0;
};

struct CriticalStepOptions {
    double dt_start = 1e-6;
    double dt_cap = 1e6;
    double relative_width = 1e-10;
};

/// Smallest dt at which max_lambda |R(dt lambda)| reaches 1, over the nonzero
/// spectrum of A (complex pairs included).
inline CriticalStep critical_step(const LinearPds& model, SchemeId id, const CriticalStepOptions& opt = {}) {
    const auto lambdas = detail::nonzero_eigenvalues(model.matrix());
    const double tr = model.trace_s_minus();
    CriticalStep out;
    auto worst = [&](double dt, Complex* arg) {
        double m = 0.0;
        for (const Complex& l : lambdas) {
            const double r = std::abs(stability_value(id, dt * l, dt * tr));
            if (r > m) {
                m = r;
                if (arg) *arg = l;
            }
        }
        return m;
    };
    if (lambdas.empty()) {
        out.unconditional = true;
        return out;
    }

    double lo = 0.0;
    double hi = opt.dt_start;
    while (worst(hi, nullptr) < 1.0) {
        if (hi >= opt.dt_cap) {
            out.unconditional = true;
            worst(hi, &out.binding_eigenvalue);
            return out;
        }
        lo = hi;
        hi = std::min(2.0 * hi, opt.dt_cap);
    }
    while (hi - lo > opt.relative_width * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (worst(mid, nullptr) < 1.0 ? lo : hi) = mid;
    }
    out.dt_star = 0.5 * (lo + hi);
    out.bracket_width = hi - lo;
    worst(hi, &out.binding_eigenvalue);
    return out;
}

struct Certificate {
    double m_value = 0.0;
    double trace_s_minus = 0.0;
    double product = 0.0;
    bool holds = false;
};

/// M = min over nonzero eigenvalues of 2|Re lambda| / |lambda|^2. Every
/// non-kernel eigenvalue of I + Phi(dt) A lies in the unit disk for all dt
/// when M * trace(S-) >= 1.
inline Certificate unconditional_certificate(const LinearPds& model) {
    Certificate c;
    c.trace_s_minus = model.trace_s_minus();
    const auto lambdas = detail::nonzero_eigenvalues(model.matrix());
    c.m_value = std::numeric_limits<double>::infinity();
    for (const Complex& l : lambdas) c.m_value = std::min(c.m_value, 2.0 * std::abs(l.real()) / std::norm(l));
    c.product = c.m_value * c.trace_s_minus;
    c.holds = c.product >= 1.0 - 1e-12;
    return c;
}

// ---------------------------------------------------------------------------
// Jacobians at steady states

using StepMap = std::function<Vector(const Vector&)>;

/// Central differences with per-coordinate step h * max(1, |y_i|).
inline Matrix numerical_jacobian(const StepMap& map, const Vector& y_star, double h = 1e-6) {
    if (!(h > 0.0)) throw ModelError("numerical_jacobian: h must be positive");
    const std::size_t n = y_star.size();
    Matrix j(n, n);
    Vector yp = y_star;
    for (std::size_t k = 0; k < n; ++k) {
        const double hk = h * std::max(1.0, std::abs(y_star[k]));
        yp[k] = y_star[k] + hk;
        const Vector fp = map(yp);
        yp[k] = y_star[k] - hk;
        const Vector fm = map(yp);
        yp[k] = y_star[k];
        for (std::size_t i = 0; i < n; ++i) j(i, k) = (fp[i] - fm[i]) / (2.0 * hk);
    }
    return j;
}

inline StepMap step_map(const LinearPds& model, const SchemeSpec& scheme, double dt) {
    return [&model, scheme, dt](const Vector& y) { return step(model, scheme, y, dt).next_state; };
}

/// Jacobian of the step map at any steady state of a linear model.
inline Matrix closed_form_jacobian(const LinearPds& model, SchemeId id, double dt) {
    const Matrix& a = model.matrix();
    const std::size_t n = a.rows();
    const Matrix eye = Matrix::identity(n);
    const double p = phi(dt * model.trace_s_minus());
    switch (id) {
        case SchemeId::euler:
        case SchemeId::gbbks1: return eye + dt * a;
        case SchemeId::heun:
        case SchemeId::gbbks2: return eye + dt * a + (0.5 * dt * dt) * (a * a);
        case SchemeId::geco1: return eye + (dt * p) * a;
        case SchemeId::geco2: return eye + dt * a + (0.5 * dt * dt * p) * (a * a);
    }
    throw ModelError("closed_form_jacobian: unknown scheme");
}

inline double max_abs_difference(const Matrix& x, const Matrix& y) { return (x - y).max_abs(); }

enum class Verdict { stable, unstable, inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct KernelSplit {
    std::size_t kernel_count = 0;    // eigenvalues inside the window around 1
    double non_kernel_radius = 0.0;  // largest modulus after removing the kernel ones
};

/// Removes the `kernel_dim` eigenvalues closest to 1 and reports the largest
/// remaining modulus, along with how many eigenvalues fall in |mu - 1| <= window.
inline KernelSplit split_kernel(const Spectrum& s, std::size_t kernel_dim, double window = 1e-8) {
    std::vector<Complex> mu = s.values;
    std::sort(mu.begin(), mu.end(),
              [](Complex x, Complex y) { return std::abs(x - 1.0) < std::abs(y - 1.0); });
    KernelSplit out;
    for (const Complex& m : mu)
        if (std::abs(m - 1.0) <= window) ++out.kernel_count;
    for (std::size_t i = std::min(kernel_dim, mu.size()); i < mu.size(); ++i)
        out.non_kernel_radius = std::max(out.non_kernel_radius, std::abs(mu[i]));
    return out;
}

struct StabilityReport {
    Matrix jacobian;
    Spectrum spectrum;
    std::size_t kernel_count = 0;
    double non_kernel_radius = 0.0;
    Verdict verdict = Verdict::inconclusive;
    double fd_discrepancy = 0.0;  // max entry of |closed form - finite differences|
};

/// Spectral classification of the steady state y_star of the step map.
inline StabilityReport classify_fixed_point(const LinearPds& model, const SchemeSpec& scheme, const Vector& y_star,
                                            double dt, double tol = 1e-9) {
    if (y_star.size() != model.dimension()) throw ModelError("classify_fixed_point: dimension mismatch");
    if (!(dt > 0.0)) throw ModelError("classify_fixed_point: dt must be positive");
    const Vector r = model.rhs(y_star);
    if (norm_inf(r) > 1e-10 * std::max(1.0, model.matrix().norm_inf() * norm_inf(y_star)))
        throw ModelError("classify_fixed_point: y_star is not a steady state");
    for (double v : y_star)
        if (!(v > 0.0)) throw ModelError("classify_fixed_point: y_star must be positive");

    StabilityReport rep;
    rep.jacobian = closed_form_jacobian(model, scheme.id, dt);
    rep.fd_discrepancy = max_abs_difference(rep.jacobian, numerical_jacobian(step_map(model, scheme, dt), y_star));
    rep.spectrum = eigenvalues(rep.jacobian);
    const std::size_t k = model.kernel_basis().size();
    const KernelSplit split = split_kernel(rep.spectrum, k);
    rep.kernel_count = split.kernel_count;
    rep.non_kernel_radius = split.non_kernel_radius;
    if (rep.kernel_count != k)
        rep.verdict = Verdict::inconclusive;
    else if (rep.non_kernel_radius < 1.0 - tol)
        rep.verdict = Verdict::stable;
    else if (rep.non_kernel_radius > 1.0 + tol)
        rep.verdict = Verdict::unstable;
    else
        rep.verdict = Verdict::inconclusive;
    return rep;
}

// ---------------------------------------------------------------------------
// GeCo2 stability region on the negative real axis

struct RegionEndpoint {
    double z_star = 0.0;
    double r_value = 0.0;           // R(z*), close to -1
    double reduced_residual = 0.0;  // z*(1 + e^{z*}) + 4
    double quoted_lower = -3.9924;  // published bracket, reported for comparison
    double quoted_upper = -3.9923;
    bool inside_quoted_bracket = false;
};

/// Left end z* of {z < 0 : |R(z)| < 1} for GeCo2 when dt * trace(S-) = -z,
/// where R(z) = 1 + (z/2)(1 + e^z).
inline RegionEndpoint geco2_region_endpoint() {
    auto r = [](double z) { return stability_value(SchemeId::geco2, z, -z).real(); };
    double lo = -5.0;  // R(lo) < -1
    double hi = -3.0;  // R(hi) > -1
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (r(mid) < -1.0 ? lo : hi) = mid;
    }
    RegionEndpoint e;
    e.z_star = 0.5 * (lo + hi);
    e.r_value = r(e.z_star);
    e.reduced_residual = e.z_star * (1.0 + std::exp(e.z_star)) + 4.0;
    e.inside_quoted_bracket = e.z_star >= e.quoted_lower && e.z_star <= e.quoted_upper;
    return e;
}

/// w = (2 phi A - 2 A - dt phi A^2) y for the two-species model, phi = phi(dt (ac + b)).
inline Vector w_vector(double a, double b, double c, const Vector& y, double dt) {
    if (y.size() != 2) throw ModelError("w_vector: state must have two components");
    if (!(dt > 0.0)) throw ModelError("w_vector: dt must be positive");
    const Matrix m = two_species_matrix(a, b, c);
    const double p = phi(dt * (a * c + b));
    const Matrix op = (2.0 * p - 2.0) * m - (dt * p) * (m * m);
    return op * y;
}

}  // namespace pdsint
