#pragma once

// Step maps: explicit Euler and Heun baselines, the geometric conservative
// GeCo1/GeCo2 schemes, and the implicit-product gBBKS1/gBBKS2(alpha) family.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pdsint/errors.hpp"
#include "pdsint/linalg.hpp"
#include "pdsint/pds.hpp"
#include "pdsint/phi.hpp"
#include "pdsint/tau_solver.hpp"

namespace pdsint {

enum class SchemeId { euler, heun, geco1, geco2, gbbks1, gbbks2 };

inline std::string_view to_string(SchemeId id) {
    switch (id) {
        case SchemeId::euler: return "euler";
        case SchemeId::heun: return "heun";
        case SchemeId::geco1: return "geco1";
        case SchemeId::geco2: return "geco2";
        case SchemeId::gbbks1: return "gbbks1";
        case SchemeId::gbbks2: return "gbbks2";
    }
    return "?";
}

inline SchemeId parse_scheme_id(std::string_view s) {
    for (SchemeId id : {SchemeId::euler, SchemeId::heun, SchemeId::geco1, SchemeId::geco2, SchemeId::gbbks1,
                        SchemeId::gbbks2})
        if (to_string(id) == s) return id;
    throw ModelError("unknown scheme '" + std::string(s) + "'");
}

/// Positivity is guaranteed for every step size.
inline bool is_positivity_preserving(SchemeId id) { return id != SchemeId::euler && id != SchemeId::heun; }

/// Free parameters of the gBBKS family, evaluated once per step from y^n
/// (and the inner stage for sigma in gBBKS2). For gBBKS1, sigma receives
/// (y^n, y^n).
struct GbbksStrategy {
    std::function<Vector(const Vector& yn, const Vector& stage)> sigma;
    std::function<double(const Vector& yn)> r;
    std::function<Vector(const Vector& yn)> pi;
    std::function<double(const Vector& yn)> q;

    /// sigma = y^n, r = 1.
    static GbbksStrategy bbks1() {
        GbbksStrategy s;
        s.sigma = [](const Vector& yn, const Vector&) { return yn; };
        s.r = [](const Vector&) { return 1.0; };
        s.pi = [](const Vector& yn) { return yn; };
        s.q = [](const Vector&) { return 1.0; };
        return s;
    }

    /// pi = y^n, sigma_m = (y^n_m)^(1 - 1/alpha) (y^(2)_m)^(1/alpha), q = r = 1.
    static GbbksStrategy bbks2(double alpha) {
        GbbksStrategy s = bbks1();
        const double e = 1.0 / alpha;
        s.sigma = [e](const Vector& yn, const Vector& y2) {
            Vector out(yn.size());
            for (std::size_t m = 0; m < yn.size(); ++m)
                out[m] = (e == 1.0) ? y2[m] : std::pow(yn[m], 1.0 - e) * std::pow(y2[m], e);
            return out;
        };
        return s;
    }
};

struct SchemeSpec {
    SchemeId id = SchemeId::geco1;
    double alpha = 1.0;  // gbbks2 only
    GbbksStrategy strategy = GbbksStrategy::bbks1();

    /// Scheme with its preset strategy: BBKS1 for gbbks1, BBKS2(alpha) for gbbks2.
    static SchemeSpec make(SchemeId id, double alpha = 1.0) {
        SchemeSpec s;
        s.id = id;
        s.alpha = alpha;
        if (id == SchemeId::gbbks2) s.strategy = GbbksStrategy::bbks2(alpha);
        s.validate();
        return s;
    }

    void validate() const {
        if (id == SchemeId::gbbks2 && !(alpha >= 0.5))
            throw ModelError("gbbks2 requires alpha >= 1/2");
        if ((id == SchemeId::gbbks1 || id == SchemeId::gbbks2) && (!strategy.sigma || !strategy.r))
            throw ModelError("gbbks strategy is incomplete");
        if (id == SchemeId::gbbks2 && (!strategy.pi || !strategy.q)) throw ModelError("gbbks2 strategy is incomplete");
    }
};

struct StepOutcome {
    Vector next_state;
    double tau = 1.0;        // outer product term, 1 when no index is active
    double tau_inner = 1.0;  // gbbks2 inner stage
    std::vector<double> phi_args;
    bool degenerate_phi = false;  // geco2 hit w_i^+ > 0 with y_i = 0
};

namespace detail {

inline void check_step_inputs(std::size_t n, const Vector& y, double dt) {
    if (y.size() != n) throw ModelError("step: state dimension mismatch");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("step: dt must be positive and finite");
    if (!all_finite(y)) throw ModelError("step: non-finite state");
}

inline void check_nonnegative(const Vector& y) {
    for (double v : y)
        if (v < 0.0) throw ModelError("step: positivity-preserving schemes require a nonnegative state");
}

inline void check_result(const Vector& y, bool require_nonnegative) {
    if (!all_finite(y)) throw NumericalError("step: non-finite result");
    if (require_nonnegative)
        for (double v : y)
            if (v < 0.0) throw NumericalError("step: rounding produced a negative component");
}

struct ActiveProduct {
    double tau = 1.0;
    std::vector<std::size_t> underflowed;  // active indices whose weight rounded to zero
};

// Solves the product term over the indices with direction_m < 0. A weight of
// exactly zero next to a positive base component can only come from underflow;
// such an index carries no representable mass and is left out of the product.
inline ActiveProduct active_tau(const Vector& base, const Vector& direction, double h, const Vector& sigma,
                                double r) {
    ActiveProduct out;
    std::vector<double> c, d, s;
    for (std::size_t m = 0; m < base.size(); ++m) {
        if (!(direction[m] < 0.0)) continue;
        if (!(base[m] > 0.0))
            throw ModelError("gbbks: active index " + std::to_string(m + 1) + " has a zero component");
        if (sigma[m] == 0.0) {
            out.underflowed.push_back(m);
            continue;
        }
        if (!(sigma[m] > 0.0) || !std::isfinite(sigma[m]))
            throw ModelError("gbbks: strategy returned sigma_" + std::to_string(m + 1) + " <= 0 on an active index");
        c.push_back(base[m]);
        d.push_back(h * direction[m]);
        s.push_back(sigma[m]);
    }
    out.tau = solve_tau(c, d, s, r).tau;
    return out;
}

// y + h direction tau, with underflowed indices flushed to zero.
inline Vector product_update(const Vector& y, const Vector& direction, double h, const ActiveProduct& p) {
    Vector out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + h * direction[i] * p.tau;
    for (std::size_t m : p.underflowed) out[m] = 0.0;
    return out;
}

}  // namespace detail

template <PdsModel M>
StepOutcome euler_step(const M& model, const Vector& y, double dt) {
    detail::check_step_inputs(model.dimension(), y, dt);
    const Vector f = model.rhs(y);
    StepOutcome out;
    out.next_state.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.next_state[i] = y[i] + dt * f[i];
    detail::check_result(out.next_state, false);
    return out;
}

/// Explicit two-stage RK in the alpha = 1 form y + dt (f/2 + f(y + dt f)/2).
template <PdsModel M>
StepOutcome heun_step(const M& model, const Vector& y, double dt) {
    detail::check_step_inputs(model.dimension(), y, dt);
    const Vector f = model.rhs(y);
    const double h2 = 1.0 * dt;
    Vector y2(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y2[i] = y[i] + h2 * f[i];
    const Vector f2 = model.rhs(y2);
    const double w1 = 1.0 - 1.0 / 2.0;
    const double w2 = 1.0 / 2.0;
    StepOutcome out;
    out.next_state.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.next_state[i] = y[i] + dt * (w1 * f[i] + w2 * f2[i]);
    detail::check_result(out.next_state, false);
    return out;
}

/// y + dt phi(dt sum_j f^[D]_j / y_j) f(y).
template <PdsModel M>
StepOutcome geco1_step(const M& model, const Vector& y, double dt) {
    detail::check_step_inputs(model.dimension(), y, dt);
    detail::check_nonnegative(y);
    const Vector f = model.rhs(y);
    const double arg = dt * model.destruction_rate_sum(y);
    const double h = dt * phi(arg);
    StepOutcome out;
    out.phi_args = {arg};
    out.next_state.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.next_state[i] = y[i] + h * f[i];
    detail::check_result(out.next_state, true);
    return out;
}

template <PdsModel M>
StepOutcome geco2_step(const M& model, const Vector& y, double dt) {
    detail::check_step_inputs(model.dimension(), y, dt);
    detail::check_nonnegative(y);
    const std::size_t n = y.size();
    const Vector f = model.rhs(y);
    const double arg1 = dt * model.destruction_rate_sum(y);
    const double phi1 = phi(arg1);
    Vector y2(n);
    for (std::size_t i = 0; i < n; ++i) y2[i] = y[i] + dt * phi1 * f[i];
    const Vector f2 = model.rhs(y2);

    StepOutcome out;
    double ratio_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 2.0 * phi1 * f[i] - f[i] - f2[i];
        if (!(w > 0.0)) continue;
        if (y[i] > 0.0) {
            ratio_sum += w / y[i];
        } else {
            ratio_sum = std::numeric_limits<double>::infinity();
            out.degenerate_phi = true;
        }
    }
    const double arg2 = dt * ratio_sum;
    const double h = 0.5 * dt * phi(arg2);
    out.phi_args = {arg1, arg2};
    out.next_state.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.next_state[i] = y[i] + h * (f[i] + f2[i]);
    detail::check_result(out.next_state, true);
    return out;
}

/// y_i + dt f_i(y) tau, tau = (prod_{f_m < 0} y^{n+1}_m / sigma_m)^r.
template <PdsModel M>
StepOutcome gbbks1_step(const M& model, const Vector& y, double dt, const GbbksStrategy& strategy) {
    detail::check_step_inputs(model.dimension(), y, dt);
    detail::check_nonnegative(y);
    const Vector f = model.rhs(y);
    StepOutcome out;
    bool active = false;
    for (double v : f) active = active || v < 0.0;
    detail::ActiveProduct p;
    if (active) p = detail::active_tau(y, f, dt, strategy.sigma(y, y), strategy.r(y));
    out.tau = p.tau;
    out.next_state = detail::product_update(y, f, dt, p);
    detail::check_result(out.next_state, true);
    return out;
}

template <PdsModel M>
StepOutcome gbbks2_step(const M& model, const Vector& y, double dt, double alpha, const GbbksStrategy& strategy) {
    detail::check_step_inputs(model.dimension(), y, dt);
    detail::check_nonnegative(y);
    if (!(alpha >= 0.5)) throw ModelError("gbbks2 requires alpha >= 1/2");
    const std::size_t n = y.size();
    const Vector f = model.rhs(y);
    StepOutcome out;

    bool active = false;
    for (double v : f) active = active || v < 0.0;
    detail::ActiveProduct inner;
    if (active) inner = detail::active_tau(y, f, alpha * dt, strategy.pi(y), strategy.q(y));
    out.tau_inner = inner.tau;
    const Vector y2 = detail::product_update(y, f, alpha * dt, inner);
    detail::check_result(y2, true);

    const Vector f2 = model.rhs(y2);
    const double w1 = 1.0 - 1.0 / (2.0 * alpha);
    const double w2 = 1.0 / (2.0 * alpha);
    Vector ft(n);
    active = false;
    for (std::size_t i = 0; i < n; ++i) {
        ft[i] = w1 * f[i] + w2 * f2[i];
        active = active || ft[i] < 0.0;
    }
    detail::ActiveProduct outer;
    if (active) outer = detail::active_tau(y, ft, dt, strategy.sigma(y, y2), strategy.r(y));
    out.tau = outer.tau;
    out.next_state = detail::product_update(y, ft, dt, outer);
    detail::check_result(out.next_state, true);
    return out;
}

template <PdsModel M>
StepOutcome step(const M& model, const SchemeSpec& scheme, const Vector& y, double dt) {
    switch (scheme.id) {
        case SchemeId::euler: return euler_step(model, y, dt);
        case SchemeId::heun: return heun_step(model, y, dt);
        case SchemeId::geco1: return geco1_step(model, y, dt);
        case SchemeId::geco2: return geco2_step(model, y, dt);
        case SchemeId::gbbks1: return gbbks1_step(model, y, dt, scheme.strategy);
        case SchemeId::gbbks2: return gbbks2_step(model, y, dt, scheme.alpha, scheme.strategy);
    }
    throw ModelError("unknown scheme");
}

// ---------------------------------------------------------------------------
// Trajectories

struct Trajectory {
    double dt = 0.0;
    std::vector<Vector> states;
    std::vector<double> invariant_defect;  // per state, relative
    std::vector<double> min_component;     // per state
    std::size_t degenerate_steps = 0;
    std::optional<std::string> failure;    // cause of an aborted run

    double time(std::size_t n) const { return static_cast<double>(n) * dt; }
    const Vector& back() const { return states.back(); }
    bool complete() const { return !failure.has_value(); }
};

/// Largest relative drift max_k |n_k^T y - n_k^T y0| / |n_k^T y0| over the
/// invariant rows (|n_k|^T |y0| replaces the denominator when n_k^T y0 = 0).
inline double invariant_defect(const Matrix& rows, const Vector& y0, const Vector& y) {
    double worst = 0.0;
    for (std::size_t k = 0; k < rows.rows(); ++k) {
        const double ref = dot(rows.row(k), y0);
        double scale = std::abs(ref);
        if (scale == 0.0)
            for (std::size_t j = 0; j < y0.size(); ++j) scale += std::abs(rows(k, j) * y0[j]);
        if (scale == 0.0) scale = 1.0;
        worst = std::max(worst, std::abs(dot(rows.row(k), y) - ref) / scale);
    }
    return worst;
}

template <PdsModel M>
Trajectory integrate(const M& model, const SchemeSpec& scheme, const Vector& y0, double dt, std::size_t n_steps) {
    scheme.validate();
    if (y0.size() != model.dimension()) throw ModelError("integrate: dimension mismatch");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("integrate: dt must be positive and finite");
    const Matrix rows = invariant_rows_of(model);
    Trajectory tr;
    tr.dt = dt;
    tr.states.reserve(n_steps + 1);
    auto record = [&](Vector y) {
        tr.invariant_defect.push_back(invariant_defect(rows, y0, y));
        double mn = std::numeric_limits<double>::infinity();
        for (double v : y) mn = std::min(mn, v);
        tr.min_component.push_back(mn);
        tr.states.push_back(std::move(y));
    };
    record(y0);
    for (std::size_t k = 0; k < n_steps; ++k) {
        try {
            StepOutcome s = step(model, scheme, tr.states.back(), dt);
            if (s.degenerate_phi) ++tr.degenerate_steps;
            record(std::move(s.next_state));
        } catch (const Error& e) {
            tr.failure = "step " + std::to_string(k + 1) + ": " + e.what();
            break;
        }
    }
    return tr;
}

}  // namespace pdsint
