#pragma once

// Small dense real linear algebra: just enough for N <= 64 test systems.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pdsint/errors.hpp"

namespace pdsint {

using Vector = std::vector<double>;
using Complex = std::complex<double>;

inline double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Row-major dense matrix with value semantics.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw ModelError("ragged matrix literal");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::span<const double> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    /// Maximum absolute row sum.
    double norm_inf() const {
        double m = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (double x : row(i)) s += std::abs(x);
            m = std::max(m, s);
        }
        return m;
    }

    double norm_fro() const {
        double s = 0.0;
        for (double x : data_) s += x * x;
        return std::sqrt(s);
    }

    double max_abs() const { return pdsint::norm_inf(data_); }

    double trace() const {
        double s = 0.0;
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
        return s;
    }

    bool finite() const { return all_finite(data_); }

    Matrix& operator+=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& x : data_) x *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw ModelError("matrix product: dimension mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend Vector operator*(const Matrix& a, std::span<const double> x) {
        if (a.cols_ != x.size()) throw ModelError("matrix-vector product: dimension mismatch");
        Vector y(a.rows_, 0.0);
        for (std::size_t i = 0; i < a.rows_; ++i) y[i] = dot(a.row(i), x);
        return y;
    }
    friend Vector operator*(const Matrix& a, const Vector& x) { return a * std::span<const double>(x); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    void check_same(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw ModelError("matrix sum: dimension mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// LU with partial pivoting

struct LuFactors {
    Matrix lu;
    std::vector<std::size_t> perm;
};

inline LuFactors lu_factor(Matrix a) {
    if (!a.square()) throw ModelError("lu_factor: matrix is not square");
    const std::size_t n = a.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const double tiny = std::numeric_limits<double>::epsilon() * std::max(a.max_abs(), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
        if (std::abs(a(p, k)) <= tiny) throw NumericalError("lu_factor: matrix is numerically singular");
        if (p != k) {
            std::swap_ranges(a.row(k).begin(), a.row(k).end(), a.row(p).begin());
            std::swap(perm[k], perm[p]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = a(i, k) / a(k, k);
            a(i, k) = l;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
        }
    }
    return {std::move(a), std::move(perm)};
}

inline Vector lu_solve(const LuFactors& f, std::span<const double> b) {
    const std::size_t n = f.lu.rows();
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[f.perm[i]];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s / f.lu(i, i);
    }
    return x;
}

inline Vector solve(const Matrix& a, std::span<const double> b) { return lu_solve(lu_factor(a), b); }

/// Solves A X = B column by column.
inline Matrix solve(const Matrix& a, const Matrix& b) {
    const auto f = lu_factor(a);
    Matrix x(b.rows(), b.cols());
    Vector col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        const Vector s = lu_solve(f, col);
        for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = s[i];
    }
    return x;
}

// ---------------------------------------------------------------------------
// Eigenvalues

struct Spectrum {
    std::vector<Complex> values;
    double convergence_tol = 0.0;
    int iterations_used = 0;

    std::size_t size() const noexcept { return values.size(); }
};

namespace detail {

// Householder reduction to upper Hessenberg form, in place.
inline void to_hessenberg(Matrix& a) {
    const std::size_t n = a.rows();
    if (n < 3) return;
    Vector v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double alpha = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) alpha += a(i, k) * a(i, k);
        alpha = std::sqrt(alpha);
        if (alpha == 0.0) continue;
        if (a(k + 1, k) > 0) alpha = -alpha;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // H A
        for (std::size_t j = k; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) s += v[i] * a(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * v[i];
        }
        // (H A) H
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= s * v[j];
        }
        a(k + 1, k) = alpha;
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

inline double copysign_nonzero(double mag, double sgn) { return sgn >= 0.0 ? std::abs(mag) : -std::abs(mag); }

// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
inline int hessenberg_qr(Matrix& a, std::vector<Complex>& out, int sweep_cap) {
    const int n = static_cast<int>(a.rows());
    const double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> wr(n, 0.0), wi(n, 0.0);
    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

    int nn = n - 1;
    int total = 0;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l >= 1; --l) {
                double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(a(l, l - 1)) <= eps * s) {
                    a(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = a(nn, nn);
            if (l == nn) {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                --nn;
            } else {
                double y = a(nn - 1, nn - 1);
                double w = a(nn, nn - 1) * a(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + w;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + copysign_nonzero(z, p);
                        wr[nn - 1] = wr[nn] = x + z;
                        if (z != 0.0) wr[nn] = x - w / z;
                        wi[nn - 1] = wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if (total >= sweep_cap)
                        throw NumericalError("eigenvalues: QR iteration did not converge within " +
                                             std::to_string(sweep_cap) + " sweeps");
                    if (its == 10 || its == 20) {
                        // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
                        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    ++total;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z = a(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
                        q = a(m + 1, m + 1) - z - r - s;
                        r = a(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v =
                            std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
                        if (u <= eps * v) break;
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a(i, i - 2) = 0.0;
                        if (i != m + 2) a(i, i - 3) = 0.0;
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a(k, k - 1);
                            q = a(k + 1, k - 1);
                            r = 0.0;
                            if (k != nn - 1) r = a(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = copysign_nonzero(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) a(k, k - 1) = -a(k, k - 1);
                        } else {
                            a(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a(k, j) + q * a(k + 1, j);
                            if (k != nn - 1) {
                                p += r * a(k + 2, j);
                                a(k + 2, j) -= p * z;
                            }
                            a(k + 1, j) -= p * y;
                            a(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a(i, k) + y * a(i, k + 1);
                            if (k != nn - 1) {
                                p += z * a(i, k + 2);
                                a(i, k + 2) -= p * r;
                            }
                            a(i, k + 1) -= p * q;
                            a(i, k) -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    out.resize(n);
    for (int i = 0; i < n; ++i) out[i] = {wr[i], wi[i]};
    return total;
}

}  // namespace detail

/// All eigenvalues of a real square matrix: Householder-Hessenberg reduction
/// followed by Francis double-shift QR. Results are sorted by descending real
/// part, then by imaginary part. Throws NumericalError after 100*N sweeps.
inline Spectrum eigenvalues(const Matrix& a) {
    if (!a.square()) throw ModelError("eigenvalues: matrix is not square");
    if (a.rows() > 64) throw ModelError("eigenvalues: dimension above 64 is not supported");
    if (!a.finite()) throw ModelError("eigenvalues: non-finite matrix entry");
    Spectrum sp;
    sp.convergence_tol = 1e-12 * a.norm_fro();
    if (a.rows() == 0) return sp;
    Matrix h = a;
    detail::to_hessenberg(h);
    sp.iterations_used = detail::hessenberg_qr(h, sp.values, 100 * static_cast<int>(a.rows()));
    std::sort(sp.values.begin(), sp.values.end(), [](Complex x, Complex y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() < y.imag();
    });
    return sp;
}

// ---------------------------------------------------------------------------
// Nullspace

/// Basis of the numerical kernel of a square matrix via Gauss-Jordan
/// elimination with partial pivoting. Pivots below rank_tol*||A||_inf are
/// treated as zero. Each basis vector is scaled to unit max-norm with its
/// largest-magnitude entry positive.
inline std::vector<Vector> nullspace(const Matrix& a, double rank_tol = 1e-10) {
    if (!a.square()) throw ModelError("nullspace: matrix is not square");
    if (!(rank_tol > 0.0)) throw ModelError("nullspace: rank_tol must be positive");
    const std::size_t n = a.rows();
    Matrix r = a;
    const double thresh = rank_tol * a.norm_inf();
    std::vector<std::size_t> pivot_cols;
    std::size_t row = 0;
    for (std::size_t col = 0; col < n && row < n; ++col) {
        std::size_t p = row;
        for (std::size_t i = row + 1; i < n; ++i)
            if (std::abs(r(i, col)) > std::abs(r(p, col))) p = i;
        if (std::abs(r(p, col)) <= thresh || r(p, col) == 0.0) {
            for (std::size_t i = row; i < n; ++i) r(i, col) = 0.0;
            continue;
        }
        if (p != row) std::swap_ranges(r.row(row).begin(), r.row(row).end(), r.row(p).begin());
        const double piv = r(row, col);
        for (std::size_t j = col; j < n; ++j) r(row, j) /= piv;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == row) continue;
            const double f = r(i, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) r(i, j) -= f * r(row, j);
            r(i, col) = 0.0;
        }
        pivot_cols.push_back(col);
        ++row;
    }
    std::vector<bool> is_pivot(n, false);
    for (auto c : pivot_cols) is_pivot[c] = true;
    std::vector<Vector> basis;
    for (std::size_t free = 0; free < n; ++free) {
        if (is_pivot[free]) continue;
        Vector v(n, 0.0);
        v[free] = 1.0;
        for (std::size_t k = 0; k < pivot_cols.size(); ++k) v[pivot_cols[k]] = -r(k, free);
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
        const double scale = v[imax];
        for (double& x : v) x /= scale;
        basis.push_back(std::move(v));
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Matrix exponential

/// exp(tA) by scaling and squaring around a (6,6) Pade approximant, with the
/// scaling chosen so that ||tA||_inf / 2^s <= 1/2.
inline Matrix expm(const Matrix& a, double t) {
    if (!a.square()) throw ModelError("expm: matrix is not square");
    if (!std::isfinite(t) || t < 0.0) throw ModelError("expm: t must be finite and nonnegative");
    if (!a.finite()) throw ModelError("expm: non-finite matrix entry");
    const std::size_t n = a.rows();
    Matrix x = a * t;
    const double nrm = x.norm_inf();
    int s = 0;
    if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    if (s > 0) x *= std::ldexp(1.0, -s);

    static constexpr double c[7] = {1.0,          1.0 / 2.0,     5.0 / 44.0,     1.0 / 66.0,
                                    1.0 / 792.0,  1.0 / 15840.0, 1.0 / 665280.0};
    Matrix num = Matrix::identity(n);
    Matrix den = Matrix::identity(n);
    Matrix power = Matrix::identity(n);
    for (int k = 1; k <= 6; ++k) {
        power = power * x;
        num += power * c[k];
        den += power * ((k % 2 == 0) ? c[k] : -c[k]);
    }
    Matrix r = solve(den, num);
    for (int k = 0; k < s; ++k) r = r * r;
    if (!r.finite()) throw NumericalError("expm: overflow");
    return r;
}

/// exp(tA) y0.
inline Vector expm_apply(const Matrix& a, std::span<const double> y0, double t) {
    if (y0.size() != a.rows()) throw ModelError("expm_apply: dimension mismatch");
    if (t == 0.0) return Vector(y0.begin(), y0.end());
    Vector y = expm(a, t) * y0;
    if (!all_finite(y)) throw NumericalError("expm_apply: overflow");
    return y;
}

// ---------------------------------------------------------------------------
// Structural checks for y' = Ay with A Metzler, k = dim ker A, spectrum in C^-

struct SystemValidation {
    bool metzler = false;
    bool proper_metzler = false;
    bool nonzero = false;
    std::size_t kernel_dim = 0;              // geometric multiplicity of 0
    std::size_t zero_multiplicity = 0;       // algebraic multiplicity of 0
    bool multiplicity_match = false;
    bool spectrum_in_closed_left_half = false;
    Spectrum spectrum;
    std::string diagnostics;

    /// All conditions of the Metzler/invariant/left-half-plane class hold.
    bool in_class() const {
        return metzler && proper_metzler && nonzero && kernel_dim >= 1 && multiplicity_match &&
               spectrum_in_closed_left_half;
    }
};

inline SystemValidation validate_system(const Matrix& a) {
    if (!a.square()) throw ModelError("validate_system: matrix is not square");
    SystemValidation v;
    const std::size_t n = a.rows();
    v.metzler = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && a(i, j) < 0.0) v.metzler = false;
        if (a(i, i) < 0.0) v.proper_metzler = true;
    }
    v.proper_metzler = v.proper_metzler && v.metzler;
    v.nonzero = a.max_abs() > 0.0;
    v.kernel_dim = nullspace(a).size();
    v.spectrum = eigenvalues(a);
    const double scale = std::max(a.norm_fro(), std::numeric_limits<double>::min());
    const double zero_tol = 1e-7 * scale;
    const double re_tol = 1e-9 * scale;
    v.spectrum_in_closed_left_half = true;
    for (const Complex& z : v.spectrum.values) {
        if (std::abs(z) <= zero_tol) ++v.zero_multiplicity;
        if (z.real() > re_tol) v.spectrum_in_closed_left_half = false;
    }
    v.multiplicity_match = v.zero_multiplicity == v.kernel_dim;

    std::ostringstream d;
    d << "metzler=" << v.metzler << " proper=" << v.proper_metzler << " k=" << v.kernel_dim
      << " mu(0)=" << v.zero_multiplicity << " left_half=" << v.spectrum_in_closed_left_half;
    v.diagnostics = d.str();
    return v;
}

/// Every eigenvalue lies in the closed disk |z - r| <= |r|, r = min_j a_jj.
inline bool metzler_disk_check(const Matrix& a, const Spectrum& spectrum) {
    if (!a.square() || a.rows() == 0) throw ModelError("metzler_disk_check: matrix is not square");
    double r = a(0, 0);
    for (std::size_t j = 1; j < a.rows(); ++j) r = std::min(r, a(j, j));
    const double tol = 1e-10 * a.norm_inf();
    return std::all_of(spectrum.values.begin(), spectrum.values.end(),
                       [&](Complex z) { return std::abs(z - r) <= std::abs(r) + tol; });
}

}  // namespace pdsint
