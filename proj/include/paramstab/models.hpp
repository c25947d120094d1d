#pragma once

// Concrete systems: the spring-mounted pendulum (closed-form quartic
// characteristic function), finite- and infinite-depth viscous
// capillary-gravity dispersion relations, and the null-space reduction of
// KKT-structured (constrained) systems.  All quantities are in cgs units;
// eigenvalues carry 1/s.

#include <cmath>
#include <limits>

#include "paramstab/charfun.hpp"

namespace paramstab {

struct BranchCut : Error {
    explicit BranchCut(const std::string& m) : Error(m) {}
};
struct RankDeficientConstraint : Error {
    explicit RankDeficientConstraint(const std::string& m) : Error(m) {}
};
struct InvalidParams : Error {
    explicit InvalidParams(const std::string& m) : Error(m) {}
};

// ---------------------------------------------------------------------------
// Spring-mounted pendulum.
// ---------------------------------------------------------------------------
struct PendulumParams {
    double m_s;      // support mass (g)
    double m_p;      // bob mass (g)
    double ell;      // pendulum length (cm)
    double k_s;      // spring constant (g/s^2)
    double gamma_s;  // support damping (g/s)
    double gamma_p;  // pendulum damping (g cm^2/s)
    double g0;       // steady gravity (cm/s^2)

    void validate() const {
        if (!(m_s > 0 && m_p > 0 && ell > 0 && k_s > 0 && gamma_s > 0 &&
              gamma_p > 0 && g0 > 0))
            throw InvalidParams("PendulumParams: all fields must be > 0");
    }
};

// First-order form: B0 = blockdiag(I, M), A0 = [[0, I], [-K0, -C]],
// forcing A1 = u v^T with u = (0,0,0,-ell)^T, v = (0,1,0,0)^T, which places
// -ell at the (x''-block, angle) slot: g(t) = g0 + eps f(t).
inline RankOneSystem pendulum_system(const PendulumParams& p) {
    p.validate();
    RankOneSystem sys;
    sys.B0 = DenseMatrix(4, 4);
    sys.A0 = DenseMatrix(4, 4);
    const double mm = p.m_s + p.m_p;
    sys.B0(0, 0) = 1.0;
    sys.B0(1, 1) = 1.0;
    sys.B0(2, 2) = mm;
    sys.B0(2, 3) = p.ell * p.m_p;
    sys.B0(3, 2) = p.ell * p.m_p;
    sys.B0(3, 3) = p.ell * p.ell * p.m_p;
    sys.A0(0, 2) = 1.0;
    sys.A0(1, 3) = 1.0;
    sys.A0(2, 0) = -p.k_s;
    sys.A0(3, 1) = -p.g0 * p.ell;
    sys.A0(2, 2) = -p.gamma_s;
    sys.A0(3, 3) = -p.gamma_p;
    sys.u = {0.0, 0.0, 0.0, cd(-p.ell)};
    sys.v = {0.0, 1.0, 0.0, 0.0};
    return sys;
}

// Closed form: f_A = h0/h1 with
//   h0 = s^4 l^2 mP mS + s^3 (gP (mP+mS) + l^2 gS mP)
//      + s^2 (gS gP + kS l^2 mP) + s gP kS + g0 h1,
//   h1 = s^2 l (mP+mS) + s gS l + kS l.
inline std::vector<cd> pendulum_h0_coeffs(const PendulumParams& p) {
    const double mm = p.m_p + p.m_s;
    return {p.g0 * p.k_s * p.ell,                                 // s^0
            p.gamma_p * p.k_s + p.g0 * p.gamma_s * p.ell,         // s^1
            p.gamma_s * p.gamma_p + p.k_s * p.ell * p.ell * p.m_p +
                p.g0 * p.ell * mm,                                // s^2
            p.gamma_p * mm + p.ell * p.ell * p.gamma_s * p.m_p,   // s^3
            p.ell * p.ell * p.m_p * p.m_s};                       // s^4
}

inline CharacteristicFunction pendulum_charfun(const PendulumParams& p) {
    p.validate();
    const auto c0 = pendulum_h0_coeffs(p);
    const double mm = p.m_p + p.m_s;
    const double b2 = p.ell * mm, b1 = p.gamma_s * p.ell, b0 = p.k_s * p.ell;
    auto h0 = [c0](cd s) {
        cd v = 0.0;
        for (std::size_t i = c0.size(); i-- > 0;) v = v * s + c0[i];
        return v;
    };
    auto h0p = [c0](cd s) {
        cd v = 0.0;
        for (std::size_t i = c0.size(); i-- > 1;)
            v = v * s + double(i) * c0[i];
        return v;
    };
    auto h1 = [=](cd s) { return (b2 * s + b1) * s + b0; };
    auto h1p = [=](cd s) { return 2.0 * b2 * s + b1; };
    CharacteristicFunction cf;
    cf.kind = CfKind::pendulum_closed_form;
    cf.value = [=](cd s) { return h0(s) / h1(s); };
    cf.derivative = [=](cd s) {
        const cd d = h1(s);
        return (h0p(s) * d - h0(s) * h1p(s)) / (d * d);
    };
    cf.enumerate = [c0](std::size_t n) {
        std::vector<cd> roots = companion_roots(c0);
        if (n > roots.size())
            throw SeedExhausted("pendulum charfun: only 4 eigenvalues exist");
        roots.resize(n);
        return roots;
    };
    return cf;
}

// ---------------------------------------------------------------------------
// Faraday dispersion relations.
// ---------------------------------------------------------------------------
struct FaradayParams {
    double rho;    // density (g/cm^3)
    double nu;     // kinematic viscosity (cm^2/s)
    double T;      // surface tension (g/s^2)
    double g0;     // gravity (cm/s^2)
    double alpha;  // wavenumber (1/cm)
    double depth;  // container depth L (cm); +infinity for deep water

    bool infinite_depth() const { return std::isinf(depth); }
    void validate() const {
        if (!(rho > 0 && nu > 0 && T > 0 && g0 > 0 && alpha > 0 &&
              depth > 0))
            throw InvalidParams("FaradayParams: all fields must be > 0");
    }
    // Inviscid estimate of the surface-mode frequency.
    double surface_frequency() const {
        return std::sqrt(g0 * alpha + T * alpha * alpha * alpha / rho);
    }
};

namespace detail {

// Finite-depth dispersion pieces, all scaled by the common factor
// C(sigma) = cosh(alpha L) e^{|Im(beta L)|} to stay bounded for large L.
// The scale cancels in every ratio we form (f_A, f_A', H/H').
struct HParts {
    cd h0, h1, h0p, h1p;  // scaled H0, H1 and their sigma-derivatives
};

inline HParts faraday_hparts(const FaradayParams& f, cd sigma) {
    const double a = f.alpha, nu = f.nu, l = f.depth, rho = f.rho, t = f.T;
    const cd beta = cd(0.0, 1.0) * std::sqrt(sigma / nu + a * a);
    const cd betap = -1.0 / (2.0 * nu * beta);
    const cd bl = beta * l;
    const double y = bl.imag(), ay = std::abs(y), x = bl.real();
    // sin(bl), cos(bl) divided by e^{|Im bl|}.
    cd e1, e2;
    if (y >= 0.0) {
        e1 = std::exp(cd(-2.0 * y, x));
        e2 = std::exp(cd(0.0, -x));
    } else {
        e1 = std::exp(cd(0.0, x));
        e2 = std::exp(cd(2.0 * y, -x));
    }
    const cd sn = (e1 - e2) / cd(0.0, 2.0);
    const cd cs = 0.5 * (e1 + e2);
    const double th = std::tanh(a * l);  // sinh(aL)/cosh(aL)
    // 1/(cosh(aL) e^{|Im bl|}) without overflow.
    const double ci =
        2.0 * std::exp(-ay - a * l) / (1.0 + std::exp(-2.0 * a * l));
    const cd d0 = -4.0 * a * a * beta * nu * (2.0 * a * a * nu + sigma);
    const cd d0p =
        -4.0 * a * a * nu * (betap * (2.0 * a * a * nu + sigma) + beta);
    const cd dc = sigma * sigma + 4.0 * a * a * nu * sigma +
                  8.0 * std::pow(a, 4) * nu * nu;
    const cd dcp = 2.0 * sigma + 4.0 * a * a * nu;
    const cd ds = -dc - 4.0 * a * a * nu * sigma;
    const cd dsp = -dcp - 4.0 * a * a * nu;
    const double dt = -a / rho;
    const cd snp = l * betap * cs;  // same scale as sn, cs
    const cd csp = -l * betap * sn;
    HParts h;
    h.h0 = d0 * ci + a * ds * th * sn + beta * dc * cs +
           t * a * a * dt * (a * sn - beta * th * cs);
    h.h1 = dt * (a * sn - beta * th * cs);
    h.h0p = d0p * ci + a * (dsp * th * sn + ds * th * snp) +
            (betap * dc + beta * dcp) * cs + beta * dc * csp +
            t * a * a * dt * (a * snp - betap * th * cs - beta * th * csp);
    h.h1p = dt * (a * snp - betap * th * cs - beta * th * csp);
    return h;
}

// Full dispersion H = H0 + rho g0 H1 (same scaling) and its derivative.
inline std::pair<cd, cd> faraday_h(const FaradayParams& f, cd sigma) {
    const HParts h = faraday_hparts(f, sigma);
    return {h.h0 + f.rho * f.g0 * h.h1, h.h0p + f.rho * f.g0 * h.h1p};
}

inline void check_branch(const FaradayParams& f, cd sigma) {
    const cd arg = sigma + f.nu * f.alpha * f.alpha;
    if (arg.real() < 0.0 &&
        std::abs(arg.imag()) <= 1e-12 * (1.0 + std::abs(arg.real())))
        throw BranchCut(
            "faraday: sigma + nu alpha^2 on the principal branch cut");
}

// Damped Newton with a step-halving line search on |fun|; the plain
// iteration diverges from the surface-mode seed for deep containers.
template <typename F, typename DF>
cd guarded_newton(const F& fun, const DF& dfun, cd s0, double tol = 5e-15,
                  int itmax = 100) {
    cd s = s0, fv = fun(s);
    for (int it = 0; it < itmax; ++it) {
        const cd dv = dfun(s);
        if (std::abs(dv) == 0.0) break;
        const cd step = fv / dv;
        double t = 1.0;
        bool improved = false;
        cd s2, f2;
        for (int ls = 0; ls < 50; ++ls) {
            s2 = s - t * step;
            f2 = fun(s2);
            if (std::abs(f2) < std::abs(fv)) {
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;
        s = s2;
        fv = f2;
        if (std::abs(t * step) <= tol * (1.0 + std::abs(s))) break;
    }
    return s;
}

// Enumerate finite-depth eigenvalues.  The surface pair is Newton-refined
// from the inviscid seed; the viscous branch is found by bisection on
// Re H between consecutive seeds sigma_k = -nu (alpha^2 + (k pi/L)^2):
// at the seeds sin(beta L) = 0 and H ~ beta d_c (-1)^k, so H alternates
// sign and each interval brackets exactly one root.
//
// Ordering convention (it fixes the truncated eigen-sum): the surface pair
// first (positive-Im member leading), then viscous modes by descending
// Re sigma.  The surface pair dominates I_p even though many shallow
// viscous modes are less damped, and the tabulated truncation benchmarks
// are reproduced only with the pair summed from the start.
inline std::vector<cd> faraday_roots_finite(const FaradayParams& f,
                                            std::size_t count) {
    auto hval = [&](cd s) { return faraday_h(f, s).first; };
    auto hder = [&](cd s) { return faraday_h(f, s).second; };
    const double ws = f.surface_frequency();
    const double re_seed = -2.0 * f.nu * f.alpha * f.alpha;
    std::vector<cd> surf;
    for (double sgn : {+1.0, -1.0}) {
        const cd s = guarded_newton(hval, hder, cd(re_seed, sgn * ws));
        if (std::abs(hval(s)) > 1e-6 * std::abs(hder(s)) * (1.0 + std::abs(s)))
            throw SeedExhausted("faraday: surface mode did not converge");
        surf.push_back(s);
    }
    std::sort(surf.begin(), surf.end(),
              [](cd a, cd b) { return a.imag() > b.imag(); });

    std::vector<cd> visc;
    const std::size_t nseeds = count + 4;
    std::vector<double> seeds(nseeds), vals(nseeds);
    for (std::size_t k = 0; k < nseeds; ++k) {
        const double kk = double(k + 1) * kPi / f.depth;
        seeds[k] = -f.nu * (f.alpha * f.alpha + kk * kk);
        vals[k] = hval(cd(seeds[k])).real();
    }
    for (std::size_t i = 0; i + 1 < nseeds && visc.size() + 2 < count + 2;
         ++i) {
        double a = seeds[i], b = seeds[i + 1];
        double fa = vals[i], fb = vals[i + 1];
        if (fa * fb > 0.0) continue;  // no sign change: no root bracketed
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            const double fm = hval(cd(mid)).real();
            if (fm == 0.0 || (b - a) > -1e-15 * std::abs(a)) break;
            if (fa * fm < 0.0) {
                b = mid;
                fb = fm;
            } else {
                a = mid;
                fa = fm;
            }
        }
        visc.push_back(cd(0.5 * (a + b)));
        if (visc.size() >= count) break;
    }
    std::vector<cd> out = surf;
    out.insert(out.end(), visc.begin(), visc.end());
    if (out.size() < count)
        throw SeedExhausted("faraday: fewer roots than requested");
    out.resize(count);
    return out;
}

}  // namespace detail

// Characteristic function for the Faraday problem.  Zeros are the
// eigenvalues and the forced dispersion relation is f_A(sigma) + eps = 0
// (the steady-gravity constant is absorbed into f_A).
inline CharacteristicFunction faraday_charfun(const FaradayParams& p) {
    p.validate();
    auto f = std::make_shared<FaradayParams>(p);
    CharacteristicFunction cf;
    if (p.infinite_depth()) {
        cf.kind = CfKind::faraday_infinite;
        cf.value = [f](cd s) {
            detail::check_branch(*f, s);
            const double a = f->alpha, nu = f->nu;
            const cd w = s + 2.0 * nu * a * a;
            return w * w / a -
                   4.0 * a * a * std::pow(nu, 1.5) *
                       std::sqrt(s + nu * a * a) +
                   f->T / f->rho * a * a + f->g0;
        };
        cf.derivative = [f](cd s) {
            detail::check_branch(*f, s);
            const double a = f->alpha, nu = f->nu;
            return 2.0 * (s + 2.0 * nu * a * a) / a -
                   2.0 * a * a * std::pow(nu, 1.5) /
                       std::sqrt(s + nu * a * a);
        };
        // Only the surface pair is discrete; the shear spectrum is
        // continuous in the half-space limit, so the eigen-sum path is
        // unavailable at infinite depth (use the residue path).
        CharacteristicFunction local = cf;
        cf.enumerate = [f, local](std::size_t n) {
            if (n > 2)
                throw SeedExhausted(
                    "faraday infinite depth: only the surface pair is "
                    "enumerable");
            const double ws = f->surface_frequency();
            const double re = -2.0 * f->nu * f->alpha * f->alpha;
            std::vector<cd> out;
            for (double sgn : {+1.0, -1.0}) {
                out.push_back(detail::guarded_newton(
                    local.value, local.derivative, cd(re, sgn * ws)));
            }
            out.resize(n);
            return out;
        };
    } else {
        cf.kind = CfKind::faraday_finite;
        cf.value = [f](cd s) {
            const detail::HParts h = detail::faraday_hparts(*f, s);
            return h.h0 / (f->rho * h.h1) + f->g0;
        };
        cf.derivative = [f](cd s) {
            const detail::HParts h = detail::faraday_hparts(*f, s);
            return (h.h0p * h.h1 - h.h0 * h.h1p) / (f->rho * h.h1 * h.h1);
        };
        cf.enumerate = [f](std::size_t n) {
            return detail::faraday_roots_finite(*f, n);
        };
    }
    return cf;
}

// ---------------------------------------------------------------------------
// KKT-structured systems: M0 u' = (K0 + eps f K1) u + Cc^T p, Cc u = 0,
// with rank-one K1 = a b^T.  Reduced to an unconstrained SPD-mass system on
// the null space of Cc via an orthonormal basis P (QR of Cc^T).
// ---------------------------------------------------------------------------
struct KktSystem {
    DenseMatrix M0;  // n x n SPD
    DenseMatrix K0;  // n x n
    DenseMatrix Cc;  // m x n, m < n, full row rank
    Vector a, b;     // K1 = a b^T
};

struct KktReduced {
    DenseMatrix M;   // P^T M0 P (SPD)
    DenseMatrix K0;  // P^T K0 P
    Vector u, v;     // reduced forcing: K1 -> (P^T a)(b^T P)
    DenseMatrix P;   // n x (n-m) orthonormal null-space basis, Cc P = 0
};

inline KktReduced kkt_reduce(const KktSystem& k) {
    const std::size_t n = k.Cc.cols(), m = k.Cc.rows();
    if (m >= n)
        throw RankDeficientConstraint(
            "kkt_reduce: constraint matrix must have fewer rows than columns");
    // Householder QR of Cc^T (n x m); accumulate the full Q and take the
    // trailing n-m columns as the null-space basis P.
    DenseMatrix r = k.Cc.transpose();
    DenseMatrix q = DenseMatrix::identity(n);
    const double scale = std::max(r.max_abs(), 1e-300);
    for (std::size_t kcol = 0; kcol < m; ++kcol) {
        double xnorm = 0.0;
        for (std::size_t i = kcol; i < n; ++i) xnorm += std::norm(r(i, kcol));
        xnorm = std::sqrt(xnorm);
        if (xnorm <= 1e-12 * scale)
            throw RankDeficientConstraint("kkt_reduce: rank-deficient Cc");
        Vector v(n, cd(0.0));
        for (std::size_t i = kcol; i < n; ++i) v[i] = r(i, kcol);
        const cd x0 = v[kcol];
        const cd phase = (std::abs(x0) > 0.0) ? x0 / std::abs(x0) : cd(1.0);
        v[kcol] += phase * xnorm;
        double vn2 = 0.0;
        for (std::size_t i = kcol; i < n; ++i) vn2 += std::norm(v[i]);
        if (vn2 == 0.0) continue;
        const double beta = 2.0 / vn2;
        for (std::size_t j = kcol; j < m; ++j) {
            cd s = 0.0;
            for (std::size_t i = kcol; i < n; ++i)
                s += std::conj(v[i]) * r(i, j);
            s *= beta;
            for (std::size_t i = kcol; i < n; ++i) r(i, j) -= s * v[i];
        }
        for (std::size_t j = 0; j < n; ++j) {
            cd s = 0.0;
            for (std::size_t i = kcol; i < n; ++i)
                s += std::conj(v[i]) * q(i, j);
            s *= beta;
            for (std::size_t i = kcol; i < n; ++i) q(i, j) -= s * v[i];
        }
        if (std::abs(r(kcol, kcol)) <= 1e-12 * scale)
            throw RankDeficientConstraint("kkt_reduce: rank-deficient Cc");
    }
    // Rows m..n-1 of q are the adjoints of the null-space directions.
    const std::size_t nred = n - m;
    KktReduced red;
    red.P = DenseMatrix(n, nred);
    for (std::size_t j = 0; j < nred; ++j)
        for (std::size_t i = 0; i < n; ++i)
            red.P(i, j) = std::conj(q(m + j, i));
    const DenseMatrix pt = red.P.adjoint();
    red.M = pt * k.M0 * red.P;
    red.K0 = pt * k.K0 * red.P;
    red.u = pt.apply(k.a);
    red.v = red.P.transpose().apply(k.b);  // (b^T P)^T, unconjugated
    return red;
}

}  // namespace paramstab
