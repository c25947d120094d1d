#pragma once

// Equivalent characteristic functions.  A CharacteristicFunction packages a
// scalar f_A(sigma) whose zeros are the system eigenvalues and for which the
// forced problem reads f_A(sigma) + epsilon = 0, together with its derivative
// and an eigenvalue enumerator.  Matrix-backed systems get the canonical
// resolvent definition 1/f_A = -v^T (sigma B0 - A0)^{-1} u; PDE dispersion
// relations plug in closed forms with the same normalization.

#include <functional>
#include <memory>
#include <utility>

#include "paramstab/linalg.hpp"

namespace paramstab {

struct NearEigenvalue : Error {
    explicit NearEigenvalue(const std::string& m) : Error(m) {}
};
struct DegenerateMode : Error {
    explicit DegenerateMode(const std::string& m) : Error(m) {}
};
struct SeedExhausted : Error {
    explicit SeedExhausted(const std::string& m) : Error(m) {}
};

struct RankOneSystem {
    DenseMatrix B0;  // SPD mass matrix
    DenseMatrix A0;  // unperturbed operator
    Vector u, v;     // forcing factors, A1 = u v^T

    DenseMatrix a1() const { return DenseMatrix::outer(u, v); }
};

enum class CfKind { matrix, pendulum_closed_form, faraday_finite, faraday_infinite };

struct CharacteristicFunction {
    CfKind kind = CfKind::matrix;
    std::function<cd(cd)> value;                         // f_A(sigma)
    std::function<cd(cd)> derivative;                    // f_A'(sigma)
    std::function<std::vector<cd>(std::size_t)> enumerate;  // N eigenvalues
};

// ---------------------------------------------------------------------------
// Canonical matrix-backed f_A and its derivative.
// ---------------------------------------------------------------------------
namespace detail {

inline DenseMatrix resolvent_matrix(const RankOneSystem& sys, cd sigma) {
    const std::size_t n = sys.A0.rows();
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m(i, j) = sigma * sys.B0(i, j) - sys.A0(i, j);
    return m;
}

}  // namespace detail

inline cd fa_matrix(const RankOneSystem& sys, cd sigma) {
    LuFactor f;
    try {
        f = lu_factor(detail::resolvent_matrix(sys, sigma));
    } catch (const Singular&) {
        throw NearEigenvalue("fa_matrix: sigma numerically at an eigenvalue");
    }
    const cd w = dot_u(sys.v, lu_solve(f, sys.u));
    return -1.0 / w;
}

// Analytic derivative f_A' = -f_A^2 v^T R B0 R u with R = (sigma B0-A0)^{-1}.
// Near an eigenvalue the resolvent is ill-conditioned and the 0*inf product
// loses accuracy, so we fall back to Richardson extrapolation of central
// differences at steps h and h/2 (four off-eigenvalue probes).
inline cd fa_matrix_derivative(const RankOneSystem& sys, cd sigma) {
    bool ill_conditioned = false;
    cd analytic = 0.0;
    try {
        const LuFactor f = lu_factor(detail::resolvent_matrix(sys, sigma));
        ill_conditioned = f.min_pivot < 1e-8 * f.scale;
        if (!ill_conditioned) {
            const Vector x = lu_solve(f, sys.u);
            const Vector y = lu_solve(f, sys.B0.apply(x));
            const cd fa = -1.0 / dot_u(sys.v, x);
            analytic = -fa * fa * dot_u(sys.v, y);
        }
    } catch (const Singular&) {
        ill_conditioned = true;
    }
    if (!ill_conditioned) return analytic;
    const double h = 1e-5 * (1.0 + std::abs(sigma));
    auto central = [&](double step) {
        return (fa_matrix(sys, sigma + step) - fa_matrix(sys, sigma - step)) /
               (2.0 * step);
    };
    const cd d1 = central(h), d2 = central(0.5 * h);
    return (4.0 * d2 - d1) / 3.0;  // Richardson: O(h^4)
}

// f_p(sigma) = -f_A(sigma) f_A'(sigma_p): the characteristic function
// normalized to the mode sigma_p.
inline cd fp_from_fa(const CharacteristicFunction& cf, cd sigma_p, cd sigma) {
    const cd fap = cf.derivative(sigma_p);
    if (std::abs(fap) < 1e-14 * (1.0 + std::abs(cf.value(sigma))))
        throw DegenerateMode("fp_from_fa: f_A'(sigma_p) ~ 0");
    return -cf.value(sigma) * fap;
}

// ---------------------------------------------------------------------------
// Newton root enumeration with Maehly deflation: the working function is
// implicitly f / prod(sigma - r_i), realized as a correction to the Newton
// step so already-found roots repel the iteration.
// ---------------------------------------------------------------------------
inline std::vector<cd> find_roots(const CharacteristicFunction& cf,
                                  const std::vector<cd>& seeds,
                                  std::size_t count) {
    if (seeds.empty()) throw SeedExhausted("find_roots: no seeds supplied");
    std::vector<cd> roots;
    for (const cd& seed : seeds) {
        if (roots.size() >= count) break;
        cd s = seed;
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            cd fv, dv;
            try {
                fv = cf.value(s);
                dv = cf.derivative(s);
            } catch (const Error&) {
                break;  // skip seeds that wander onto singular points
            }
            // Residual already at the floor (seed essentially on the root):
            // the |f|-decrease guard below could never accept a step.
            if (std::abs(fv) <= 1e-11 * std::abs(dv) * (1.0 + std::abs(s))) {
                converged = true;
                break;
            }
            cd defl = 0.0;
            for (const cd& r : roots) {
                const cd d = s - r;
                if (std::abs(d) < 1e-14) {
                    defl = 0.0;
                    break;
                }
                defl += 1.0 / d;
            }
            const cd denom = dv - fv * defl;
            if (std::abs(denom) == 0.0) break;
            const cd step = fv / denom;
            // Step-halving guard: f_A may have poles interlacing its zeros
            // (dispersion-relation quotients), where the raw Newton step
            // overshoots; insist on |f| decreasing.
            double t = 1.0;
            cd s2 = s - step, f2;
            for (int ls = 0; ls < 40; ++ls) {
                bool ok = true;
                try {
                    f2 = cf.value(s2);
                } catch (const Error&) {
                    ok = false;
                }
                if (ok && std::abs(f2) < std::abs(fv)) break;
                t *= 0.5;
                s2 = s - t * step;
                if (ls == 39) t = 0.0;
            }
            if (t == 0.0) {
                converged =
                    std::abs(fv) <= 1e-10 * std::abs(dv) * (1.0 + std::abs(s));
                break;
            }
            s = s2;
            if (std::abs(t * step) <= 1e-12 * (1.0 + std::abs(s)) &&
                std::abs(fv) <= 1e-10 * std::abs(dv) * (1.0 + std::abs(s))) {
                converged = true;
                break;
            }
        }
        if (!converged) continue;  // NonConvergent seed: skipped
        bool duplicate = false;
        for (const cd& r : roots)
            if (std::abs(s - r) <= 1e-8) duplicate = true;
        if (!duplicate) roots.push_back(s);
    }
    if (roots.size() < count)
        throw SeedExhausted("find_roots: found " +
                            std::to_string(roots.size()) + " of " +
                            std::to_string(count) + " requested roots");
    return roots;
}

// Build the canonical matrix-backed characteristic function; eigenvalues are
// enumerated through the dense generalized eigensolver.
inline CharacteristicFunction make_matrix_charfun(RankOneSystem sys) {
    auto shared = std::make_shared<RankOneSystem>(std::move(sys));
    CharacteristicFunction cf;
    cf.kind = CfKind::matrix;
    cf.value = [shared](cd s) { return fa_matrix(*shared, s); };
    cf.derivative = [shared](cd s) { return fa_matrix_derivative(*shared, s); };
    cf.enumerate = [shared](std::size_t n) {
        EigenData e = eig_general(shared->A0, shared->B0);
        if (n > e.sigma.size())
            throw SeedExhausted("matrix charfun: system order smaller than N");
        return std::vector<cd>(e.sigma.begin(), e.sigma.begin() + n);
    };
    return cf;
}

}  // namespace paramstab
