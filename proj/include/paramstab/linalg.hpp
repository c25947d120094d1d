#pragma once

// Dense complex linear algebra at desk scale: Cholesky, LU with partial
// pivoting, the generalized nonsymmetric eigenproblem with adjoint
// eigenvectors and B-weighted bi-orthonormalization, and companion-matrix
// polynomial roots.  Everything is O(n^3) dense; intended for system orders
// up to a few thousand.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>

#include "paramstab/common.hpp"

namespace paramstab {

struct NotSpd : Error {
    explicit NotSpd(const std::string& m) : Error(m) {}
};
struct Singular : Error {
    explicit Singular(const std::string& m) : Error(m) {}
};
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& m) : Error(m) {}
};
struct DefectivePencil : Error {
    explicit DefectivePencil(const std::string& m) : Error(m) {}
};
struct DegreeZero : Error {
    explicit DegreeZero(const std::string& m) : Error(m) {}
};

// ---------------------------------------------------------------------------
// DenseMatrix: row-major complex matrix.
// ---------------------------------------------------------------------------
class DenseMatrix {
  public:
    DenseMatrix() : rows_(0), cols_(0) {}
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), a_(rows * cols, cd(0.0)) {}

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static DenseMatrix diag(const Vector& d) {
        DenseMatrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }
    static DenseMatrix outer(const Vector& u, const Vector& v) {
        DenseMatrix m(u.size(), v.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cd& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    const cd& operator()(std::size_t i, std::size_t j) const {
        return a_[i * cols_ + j];
    }

    double max_abs() const {
        double m = 0.0;
        for (const cd& x : a_) m = std::max(m, std::abs(x));
        return m;
    }
    bool all_finite() const {
        for (const cd& x : a_)
            if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
                return false;
        return true;
    }

    DenseMatrix transpose() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
    DenseMatrix adjoint() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                t(j, i) = std::conj((*this)(i, j));
        return t;
    }

    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
        DenseMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const cd aik = a(i, k);
                if (aik == cd(0.0)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    c(i, j) += aik * b(k, j);
            }
        return c;
    }
    friend DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
        DenseMatrix c = a;
        for (std::size_t i = 0; i < c.a_.size(); ++i) c.a_[i] += b.a_[i];
        return c;
    }
    friend DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
        DenseMatrix c = a;
        for (std::size_t i = 0; i < c.a_.size(); ++i) c.a_[i] -= b.a_[i];
        return c;
    }
    friend DenseMatrix operator*(cd s, const DenseMatrix& a) {
        DenseMatrix c = a;
        for (cd& x : c.a_) x *= s;
        return c;
    }

    Vector apply(const Vector& x) const {
        Vector y(rows_, cd(0.0));
        for (std::size_t i = 0; i < rows_; ++i) {
            cd s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

  private:
    std::size_t rows_, cols_;
    std::vector<cd> a_;
};

// ---------------------------------------------------------------------------
// Small vector helpers.
// ---------------------------------------------------------------------------
inline cd dot_u(const Vector& x, const Vector& y) {  // unconjugated x^T y
    cd s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}
inline cd dot_c(const Vector& x, const Vector& y) {  // conjugated x^H y
    cd s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
    return s;
}
inline double norm2(const Vector& x) { return std::sqrt(std::abs(dot_c(x, x))); }
inline void scale(Vector& x, cd s) {
    for (cd& v : x) v *= s;
}

// ---------------------------------------------------------------------------
// Cholesky factorization of a real symmetric positive-definite matrix.
// Returns lower-triangular L with B = L L^T.  Imaginary parts must be
// negligible; a nonpositive pivot raises NotSpd.
// ---------------------------------------------------------------------------
inline DenseMatrix cholesky(const DenseMatrix& b) {
    const std::size_t n = b.rows();
    if (n != b.cols()) throw NotSpd("cholesky: matrix not square");
    const double scale = std::max(b.max_abs(), 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(b(i, j).imag()) > 1e-12 * scale)
                throw NotSpd("cholesky: matrix not real");
            if (std::abs(b(i, j) - b(j, i)) > 1e-10 * scale)
                throw NotSpd("cholesky: matrix not symmetric");
        }
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = b(j, j).real();
        for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
        if (d <= 0.0) throw NotSpd("cholesky: nonpositive pivot");
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            cd s = b(i, j);
            for (std::size_t k = 0; k < j; ++k)
                s -= l(i, k) * std::conj(l(j, k));
            l(i, j) = s / ljj;
        }
    }
    return l;
}

// Forward/back substitution with a (lower) triangular factor.
inline Vector solve_lower(const DenseMatrix& l, Vector b) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) b[i] -= l(i, j) * b[j];
        b[i] /= l(i, i);
    }
    return b;
}
inline Vector solve_lower_transposed(const DenseMatrix& l, Vector b) {
    const std::size_t n = l.rows();
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) b[ii] -= l(j, ii) * b[j];
        b[ii] /= l(ii, ii);
    }
    return b;
}

// ---------------------------------------------------------------------------
// LU with partial pivoting over complex scalars.
// ---------------------------------------------------------------------------
struct LuFactor {
    DenseMatrix lu;           // combined L (unit diagonal) and U
    std::vector<std::size_t> piv;
    double min_pivot = 0.0;   // smallest |U(k,k)| seen
    double scale = 0.0;       // max |A| entry at factorization time
};

// Pivots below this fraction of the matrix scale are treated as exactly
// singular (sigma numerically at an eigenvalue when factoring a resolvent).
inline constexpr double kSingularTol = 1e-16;

inline LuFactor lu_factor(DenseMatrix a) {
    const std::size_t n = a.rows();
    if (n != a.cols()) throw Singular("lu_factor: matrix not square");
    LuFactor f;
    f.scale = std::max(a.max_abs(), std::numeric_limits<double>::min());
    f.piv.resize(n);
    f.min_pivot = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = std::abs(a(i, k));
            if (m > best) {
                best = m;
                p = i;
            }
        }
        f.piv[k] = p;
        if (p != k)
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
        if (best <= kSingularTol * f.scale)
            throw Singular("lu_factor: pivot below singularity threshold");
        f.min_pivot = std::min(f.min_pivot, best);
        const cd inv = 1.0 / a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const cd lik = a(i, k) * inv;
            a(i, k) = lik;
            if (lik == cd(0.0)) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= lik * a(k, j);
        }
    }
    f.lu = std::move(a);
    return f;
}

inline Vector lu_solve(const LuFactor& f, Vector b) {
    const std::size_t n = f.lu.rows();
    // The factorization swaps whole rows (L part included), so the stored
    // factors refer to the fully permuted ordering: permute b first.
    for (std::size_t k = 0; k < n; ++k)
        if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = k + 1; i < n; ++i) b[i] -= f.lu(i, k) * b[k];
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) b[ii] -= f.lu(ii, j) * b[j];
        b[ii] /= f.lu(ii, ii);
    }
    return b;
}

inline Vector solve(const DenseMatrix& a, const Vector& b) {
    return lu_solve(lu_factor(a), b);
}

// ---------------------------------------------------------------------------
// Eigenvalues of a general complex matrix: Hessenberg reduction followed by
// explicit single-shift QR with Wilkinson shifts.
// ---------------------------------------------------------------------------
namespace detail {

inline void hessenberg_reduce(DenseMatrix& h) {
    const std::size_t n = h.rows();
    if (n < 3) return;
    for (std::size_t k = 0; k + 2 < n; ++k) {
        // Householder vector for column k, rows k+1..n-1.
        double xnorm = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) xnorm += std::norm(h(i, k));
        xnorm = std::sqrt(xnorm);
        if (xnorm == 0.0) continue;
        cd x0 = h(k + 1, k);
        const cd phase = (std::abs(x0) > 0.0) ? x0 / std::abs(x0) : cd(1.0);
        Vector v(n, cd(0.0));
        for (std::size_t i = k + 1; i < n; ++i) v[i] = h(i, k);
        v[k + 1] += phase * xnorm;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) vnorm2 += std::norm(v[i]);
        if (vnorm2 == 0.0) continue;
        const double beta = 2.0 / vnorm2;
        // H <- (I - beta v v^H) H
        for (std::size_t j = k; j < n; ++j) {
            cd s = 0.0;
            for (std::size_t i = k + 1; i < n; ++i)
                s += std::conj(v[i]) * h(i, j);
            s *= beta;
            for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
        }
        // H <- H (I - beta v v^H)
        for (std::size_t i = 0; i < n; ++i) {
            cd s = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
            s *= beta;
            for (std::size_t j = k + 1; j < n; ++j)
                h(i, j) -= s * std::conj(v[j]);
        }
        for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
    }
}

inline cd wilkinson_shift(const DenseMatrix& h, std::size_t m) {
    // Eigenvalue of the trailing 2x2 block [rows m-1,m] closest to h(m,m).
    const cd a = h(m - 1, m - 1), b = h(m - 1, m);
    const cd c = h(m, m - 1), d = h(m, m);
    const cd tr = a + d;
    const cd disc = std::sqrt(tr * tr - 4.0 * (a * d - b * c));
    const cd l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
    return (std::abs(l1 - d) < std::abs(l2 - d)) ? l1 : l2;
}

}  // namespace detail

// Eigenvalues only, any complex square matrix.  Throws NoConvergence if the
// QR iteration budget (40 per eigenvalue) is exceeded.
inline std::vector<cd> eig_dense(DenseMatrix a) {
    const std::size_t n = a.rows();
    if (n != a.cols()) throw NoConvergence("eig_dense: matrix not square");
    std::vector<cd> eig(n);
    if (n == 0) return eig;
    if (n == 1) {
        eig[0] = a(0, 0);
        return eig;
    }
    detail::hessenberg_reduce(a);
    const double eps = std::numeric_limits<double>::epsilon();
    std::size_t active = n;
    std::size_t iters = 0, since_deflate = 0;
    const std::size_t budget = 40 * n;
    while (active > 0) {
        // Zero negligible subdiagonals inside the active block.
        for (std::size_t k = 1; k < active; ++k) {
            const double t =
                std::abs(a(k - 1, k - 1)) + std::abs(a(k, k));
            if (std::abs(a(k, k - 1)) <= eps * std::max(t, 1e-300))
                a(k, k - 1) = 0.0;
        }
        if (active == 1 || a(active - 1, active - 2) == cd(0.0)) {
            eig[active - 1] = a(active - 1, active - 1);
            --active;
            since_deflate = 0;
            continue;
        }
        if (++iters > budget)
            throw NoConvergence("eig_dense: QR iteration budget exceeded");
        cd mu = detail::wilkinson_shift(a, active - 1);
        if (++since_deflate % 16 == 0) {
            // Exceptional shift to break rare shift cycles.
            mu = a(active - 1, active - 1) +
                 cd(1.0, 0.5) * std::abs(a(active - 1, active - 2));
        }
        // Explicit shifted QR sweep on the active block via Givens rotations.
        std::vector<cd> cs(active - 1), sn(active - 1);
        for (std::size_t k = 0; k < active; ++k) a(k, k) -= mu;
        for (std::size_t k = 0; k + 1 < active; ++k) {
            const cd x1 = a(k, k), x2 = a(k + 1, k);
            const double r = std::sqrt(std::norm(x1) + std::norm(x2));
            if (r == 0.0) {
                cs[k] = 1.0;
                sn[k] = 0.0;
                continue;
            }
            cs[k] = x1 / r;
            sn[k] = x2 / r;
            for (std::size_t j = k; j < active; ++j) {
                const cd h1 = a(k, j), h2 = a(k + 1, j);
                a(k, j) = std::conj(cs[k]) * h1 + std::conj(sn[k]) * h2;
                a(k + 1, j) = -sn[k] * h1 + cs[k] * h2;
            }
        }
        for (std::size_t k = 0; k + 1 < active; ++k) {
            const std::size_t top = std::min(k + 2, active - 1);
            for (std::size_t i = 0; i <= top; ++i) {
                const cd h1 = a(i, k), h2 = a(i, k + 1);
                a(i, k) = h1 * cs[k] + h2 * sn[k];
                a(i, k + 1) = -h1 * std::conj(sn[k]) + h2 * std::conj(cs[k]);
            }
        }
        for (std::size_t k = 0; k < active; ++k) a(k, k) += mu;
    }
    return eig;
}

// ---------------------------------------------------------------------------
// Generalized eigenproblem A0 phi = sigma B0 phi with SPD B0.
// ---------------------------------------------------------------------------
struct EigenData {
    std::size_t order = 0;
    std::vector<cd> sigma;         // descending Re, ties descending Im
    std::vector<Vector> phi;       // right eigenvectors
    std::vector<Vector> psi;       // adjoint (left) eigenvectors
};

// Deterministic mode ordering used across the library.  Real parts that
// agree to rounding (conjugate pairs computed independently) count as tied
// so the positive-imaginary member always leads.
inline bool eig_order_before(const cd& a, const cd& b) {
    const double tol =
        1e-9 * (1.0 + std::max(std::abs(a.real()), std::abs(b.real())));
    if (std::abs(a.real() - b.real()) > tol) return a.real() > b.real();
    return a.imag() > b.imag();
}

inline EigenData eig_general(const DenseMatrix& a0, const DenseMatrix& b0,
                             double tol = 1e-10) {
    const std::size_t n = a0.rows();
    if (a0.cols() != n || b0.rows() != n || b0.cols() != n)
        throw NoConvergence("eig_general: dimension mismatch");
    const DenseMatrix l = cholesky(b0);

    // C = L^-1 A0 L^-T (similar to B0^-1 A0).
    DenseMatrix c(n, n);
    {
        // X = L^-1 A0 (column solves), then C^T = L^-1 X^T (row solves).
        DenseMatrix x(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            Vector col(n);
            for (std::size_t i = 0; i < n; ++i) col[i] = a0(i, j);
            col = solve_lower(l, col);
            for (std::size_t i = 0; i < n; ++i) x(i, j) = col[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            Vector row(n);
            for (std::size_t j = 0; j < n; ++j) row[j] = x(i, j);
            row = solve_lower(l, row);
            for (std::size_t j = 0; j < n; ++j) c(i, j) = row[j];
        }
    }

    std::vector<cd> sigma = eig_dense(c);
    std::sort(sigma.begin(), sigma.end(), eig_order_before);

    EigenData out;
    out.order = n;
    out.sigma.resize(n);
    out.phi.resize(n);
    out.psi.resize(n);

    const DenseMatrix ch = c.adjoint();
    const double cscale = std::max(c.max_abs(), 1e-300);
    std::mt19937 rng(0x5eed1234u);  // fixed seed: deterministic output
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    for (std::size_t k = 0; k < n; ++k) {
        cd sk = sigma[k];
        // Perturbed shift avoids exact singularity of C - sigma I.
        const cd shift =
            sk * (1.0 + 1e-10) + ((std::abs(sk) < 1e-14 * cscale)
                                      ? cd(1e-10 * cscale)
                                      : cd(0.0));
        DenseMatrix mr = c, ml = ch;
        for (std::size_t i = 0; i < n; ++i) {
            mr(i, i) -= shift;
            ml(i, i) -= std::conj(shift);
        }
        const LuFactor fr = lu_factor(mr), fl = lu_factor(ml);
        Vector q(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = cd(unif(rng), unif(rng));
            p[i] = cd(unif(rng), unif(rng));
        }
        for (int it = 0; it < 3; ++it) {  // inverse iteration + refinement
            q = lu_solve(fr, q);
            scale(q, 1.0 / norm2(q));
            p = lu_solve(fl, p);
            scale(p, 1.0 / norm2(p));
        }
        // Two-sided Rayleigh quotient: quadratically accurate eigenvalue.
        const Vector cq = c.apply(q);
        const cd pq = dot_c(p, q);
        if (std::abs(pq) > 1e-12) sk = dot_c(p, cq) / pq;
        out.sigma[k] = sk;
        // Back-transform to the generalized pencil.
        out.phi[k] = solve_lower_transposed(l, q);
        out.psi[k] = solve_lower_transposed(l, p);
    }

    // Bi-orthonormalize: <psi_k, phi_k>_B = psi^H B0 phi = 1 with psi kept
    // at unit 2-norm; only the product is fixed by the normalization.
    for (std::size_t k = 0; k < n; ++k) {
        scale(out.psi[k], 1.0 / norm2(out.psi[k]));
        const Vector bphi = b0.apply(out.phi[k]);
        const cd d = dot_c(out.psi[k], bphi);
        const double floor =
            1e-8 * norm2(out.phi[k]) * std::max(b0.max_abs(), 1e-300);
        if (std::abs(d) < floor)
            throw DefectivePencil(
                "eig_general: near-defective eigenvalue, |<psi,phi>_B| ~ 0");
        scale(out.phi[k], 1.0 / d);
    }
    (void)tol;
    return out;
}

// ---------------------------------------------------------------------------
// Roots of a polynomial (ascending coefficients) via the companion matrix,
// with a couple of Newton polish steps.
// ---------------------------------------------------------------------------
inline std::vector<cd> companion_roots(const std::vector<cd>& coeffs) {
    std::vector<cd> c = coeffs;
    while (c.size() > 1 && std::abs(c.back()) == 0.0) c.pop_back();
    if (c.size() < 2)
        throw DegreeZero("companion_roots: polynomial degree < 1");
    const std::size_t deg = c.size() - 1;
    const cd lead = c.back();
    DenseMatrix comp(deg, deg);
    for (std::size_t i = 0; i + 1 < deg; ++i) comp(i + 1, i) = 1.0;
    for (std::size_t i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i] / lead;
    std::vector<cd> roots = eig_dense(comp);
    // Polish with Newton on the original polynomial (Horner evaluation).
    for (cd& r : roots) {
        for (int it = 0; it < 3; ++it) {
            cd pv = 0.0, dv = 0.0;
            for (std::size_t i = c.size(); i-- > 0;) {
                dv = dv * r + pv;
                pv = pv * r + c[i];
            }
            if (std::abs(dv) == 0.0) break;
            const cd step = pv / dv;
            r -= step;
            if (std::abs(step) <= 1e-15 * (1.0 + std::abs(r))) break;
        }
    }
    std::sort(roots.begin(), roots.end(), eig_order_before);
    return roots;
}

}  // namespace paramstab
