#pragma once

// Production-destruction models: linear Metzler systems y' = Ay = S+ y - S- y
// and general systems given through callables.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pdsint/errors.hpp"
#include "pdsint/linalg.hpp"

namespace pdsint {

/// Anything the step maps can advance: a right-hand side and the sum of
/// destruction rates sum_j f^[D]_j(y) / y_j.
template <class M>
concept PdsModel = requires(const M& m, const Vector& y) {
    { m.dimension() } -> std::convertible_to<std::size_t>;
    { m.rhs(y) } -> std::same_as<Vector>;
    { m.destruction_rate_sum(y) } -> std::convertible_to<double>;
};

struct MetzlerSplit {
    Matrix s_plus;
    Matrix s_minus;  // diagonal
};

/// S- = diag(max(-a_jj, 0)), S+ = A + S-. Rejects non-Metzler input.
inline MetzlerSplit split_metzler(const Matrix& a) {
    if (!a.square()) throw ModelError("split_metzler: matrix is not square");
    const std::size_t n = a.rows();
    MetzlerSplit out{a, Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && a(i, j) < 0.0)
                throw ModelError("split_metzler: negative off-diagonal entry at (" + std::to_string(i + 1) + "," +
                                 std::to_string(j + 1) + ")");
        const double d = std::max(-a(i, i), 0.0);
        out.s_minus(i, i) = d;
        out.s_plus(i, i) = a(i, i) + d;
    }
    return out;
}

/// y' = Ay with A Metzler. Immutable after construction.
class LinearPds {
public:
    explicit LinearPds(Matrix a) : a_(std::move(a)) {
        if (!a_.finite()) throw ModelError("LinearPds: non-finite matrix entry");
        auto split = split_metzler(a_);
        s_plus_ = std::move(split.s_plus);
        s_minus_ = std::move(split.s_minus);
        trace_s_minus_ = s_minus_.trace();
        kernel_basis_ = nullspace(a_);
        const auto inv = nullspace(a_.transpose());
        invariant_rows_ = Matrix(inv.size(), a_.rows());
        for (std::size_t k = 0; k < inv.size(); ++k)
            for (std::size_t j = 0; j < a_.rows(); ++j) invariant_rows_(k, j) = inv[k][j];
    }

    std::size_t dimension() const noexcept { return a_.rows(); }
    const Matrix& matrix() const noexcept { return a_; }
    const Matrix& s_plus() const noexcept { return s_plus_; }
    const Matrix& s_minus() const noexcept { return s_minus_; }
    const Matrix& invariant_rows() const noexcept { return invariant_rows_; }
    const std::vector<Vector>& kernel_basis() const noexcept { return kernel_basis_; }
    double trace_s_minus() const noexcept { return trace_s_minus_; }

    Vector rhs(const Vector& y) const { return a_ * y; }

    /// sum_j s-_jj y_j / y_j collapses to trace(S-) for every y, including
    /// states with zero components.
    double destruction_rate_sum(const Vector&) const noexcept { return trace_s_minus_; }

private:
    Matrix a_;
    Matrix s_plus_;
    Matrix s_minus_;
    Matrix invariant_rows_;
    std::vector<Vector> kernel_basis_;
    double trace_s_minus_ = 0.0;
};

/// y' = f^[P](y) - f^[D](y) given through callables. Either a destruction
/// rate d(y) with f^[D]_j = d_j y_j (usable at zero components) or the raw
/// destruction term must be present.
struct GeneralPds {
    using Field = std::function<Vector(const Vector&)>;

    std::size_t n = 0;
    Field rhs_fn;
    Field production;
    Field destruction_rate;  // d(y)
    Field destruction;       // f^[D](y), used only when destruction_rate is empty
    std::optional<Matrix> invariants;

    std::size_t dimension() const noexcept { return n; }

    Vector rhs(const Vector& y) const {
        if (rhs_fn) return rhs_fn(y);
        if (!production) throw ModelError("GeneralPds: neither rhs nor production is set");
        Vector f = production(y);
        if (destruction_rate) {
            const Vector d = destruction_rate(y);
            for (std::size_t j = 0; j < n; ++j) f[j] -= d[j] * y[j];
        } else if (destruction) {
            const Vector d = destruction(y);
            for (std::size_t j = 0; j < n; ++j) f[j] -= d[j];
        } else {
            throw ModelError("GeneralPds: no destruction term");
        }
        return f;
    }

    double destruction_rate_sum(const Vector& y) const {
        double s = 0.0;
        if (destruction_rate) {
            const Vector d = destruction_rate(y);
            for (double x : d) s += x;
            return s;
        }
        if (!destruction) throw ModelError("GeneralPds: no destruction term");
        const Vector d = destruction(y);
        for (std::size_t j = 0; j < n; ++j) {
            if (d[j] == 0.0) continue;
            if (!(y[j] > 0.0))
                throw ModelError("GeneralPds: destruction ratio undefined at zero component " +
                                 std::to_string(j + 1) + " (supply destruction_rate)");
            s += d[j] / y[j];
        }
        return s;
    }

    /// The linear model A written with destruction rates d_j = s-_jj.
    static GeneralPds from_linear(const LinearPds& m) {
        GeneralPds g;
        g.n = m.dimension();
        const Matrix sp = m.s_plus();
        Vector rates(g.n);
        for (std::size_t j = 0; j < g.n; ++j) rates[j] = m.s_minus()(j, j);
        g.production = [sp](const Vector& y) { return sp * y; };
        g.destruction_rate = [rates](const Vector&) { return rates; };
        g.invariants = m.invariant_rows();
        return g;
    }
};

inline double destruction_rate_sum(const LinearPds& m, const Vector& y) { return m.destruction_rate_sum(y); }
inline double destruction_rate_sum(const GeneralPds& m, const Vector& y) { return m.destruction_rate_sum(y); }

/// Invariant rows of a model, or an empty matrix when none are known.
inline Matrix invariant_rows_of(const LinearPds& m) { return m.invariant_rows(); }
inline Matrix invariant_rows_of(const GeneralPds& m) {
    return m.invariants ? *m.invariants : Matrix(0, m.dimension());
}

/// The steady state in ker(A) that carries the same linear invariants as y0.
inline Vector steady_state_for(const LinearPds& model, const Vector& y0) {
    const Matrix& a = model.matrix();
    const std::size_t n = model.dimension();
    if (y0.size() != n) throw ModelError("steady_state_for: dimension mismatch");
    const auto& kb = model.kernel_basis();
    if (kb.empty()) throw ModelError("steady_state_for: trivial kernel");
    const Vector ay0 = a * y0;
    if (norm_inf(ay0) <= 1e-14 * a.norm_inf() * norm_inf(y0)) return y0;

    const Matrix& nr = model.invariant_rows();
    const std::size_t k = kb.size();
    // B = N K (invariants x kernel coordinates); least-norm solve of B c = N y0.
    Matrix b(nr.rows(), k);
    for (std::size_t i = 0; i < nr.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) b(i, j) = dot(nr.row(i), kb[j]);
    const Vector rhs = nr * y0;
    const Matrix bt = b.transpose();
    const Matrix gram = bt * b;
    const Vector btr = bt * rhs;
    Vector coeff;
    try {
        coeff = solve(gram, btr);
    } catch (const NumericalError&) {
        throw NumericalError("steady_state_for: kernel basis is degenerate with respect to the invariants");
    }
    Vector ys(n, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) ys[i] += coeff[j] * kb[j][i];
    return ys;
}

// ---------------------------------------------------------------------------
// Reference problems

/// [[-ac, bc], [a, -b]], kernel spanned by (b, a), invariant y1 + c y2.
inline Matrix two_species_matrix(double a, double b, double c) {
    if (!(a > 0 && b > 0 && c > 0)) throw ModelError("two-species model: a, b, c must be positive");
    return Matrix{{-a * c, b * c}, {a, -b}};
}

/// Five-species system with spectrum {0, -5 +- sqrt(3), -5 +- i}.
inline Matrix five_species_matrix() {
    return Matrix{{-4, 2, 1, 2, 2}, {1, -4, 1, 0, 2}, {0, 0, -4, 2, 0}, {2, 2, 2, -4, 0}, {1, 0, 0, 0, -4}};
}

inline Vector five_species_start() { return {0, 3, 3, 3, 4}; }

/// Linear chain y1 -> y2 -> y3 with rates K and 1; stiff for large K.
inline Matrix stiff_chain_matrix(double k) {
    if (!(k > 0) || !std::isfinite(k)) throw ModelError("stiff chain: K must be positive");
    return Matrix{{-k, 0, 0}, {k, -1, 0}, {0, 1, 0}};
}

inline Vector stiff_chain_start() { return {0.98, 0.01, 0.01}; }

/// Closed-form solution of the stiff chain for K != 1.
inline Vector stiff_chain_exact(double k, double t) {
    if (k == 1.0) throw ModelError("stiff_chain_exact: closed form requires K != 1");
    const double ekt = std::exp(-k * t);
    const double et = std::exp(-t);
    const double y1 = 49.0 * ekt / 50.0;
    const double y2 = (99.0 * k - 1.0) * et / (100.0 * (k - 1.0)) - 49.0 * k * ekt / (50.0 * (k - 1.0));
    const double y3 = 1.0 - (99.0 * k - 1.0) * et / (100.0 * (k - 1.0)) + 49.0 * ekt / (50.0 * (k - 1.0));
    return {y1, y2, y3};
}

/// Seeded random Metzler matrix with zero column sums that passes
/// validate_system. About a third of the off-diagonal entries are zero.
inline LinearPds random_metzler_system(std::uint64_t seed, std::size_t n) {
    if (n < 2) throw ModelError("random_metzler_system: N must be at least 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    std::bernoulli_distribution keep(2.0 / 3.0);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Matrix a(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == j) continue;
                const double v = value(rng);
                a(i, j) = keep(rng) ? v : 0.0;
                col += a(i, j);
            }
            a(j, j) = -col;
        }
        if (validate_system(a).in_class()) return LinearPds(a);
    }
    throw NumericalError("random_metzler_system: 100 consecutive rejections");
}

}  // namespace pdsint
