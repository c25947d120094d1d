#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "paramstab/models.hpp"
#include "paramstab/stability.hpp"

using namespace paramstab;

namespace {
std::mt19937 rng(0x0dd5eedau);
double urand(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}
PendulumParams ref_pend() {
    return PendulumParams{10.0, 1.0, 5.0, 4000.0, 2.0, 50.0, 981.0};
}
FaradayParams ref_faraday(double depth) {
    return FaradayParams{0.95, 0.1, 70.0, 1000.0, 5.0, depth};
}
}  // namespace

TEST_CASE("pendulum_system: mass matrix SPD and forcing layout") {
    PendulumParams p = ref_pend();
    RankOneSystem sys = pendulum_system(p);
    // lower-right block is M; det M = ell^2 m_P m_S > 0
    const double det = (sys.B0(2, 2) * sys.B0(3, 3) - sys.B0(2, 3) * sys.B0(3, 2)).real();
    CHECK(det == doctest::Approx(p.ell * p.ell * p.m_p * p.m_s));
    CHECK_NOTHROW(cholesky(sys.B0));
    // A1 = u v^T places -ell at the (angle acceleration, angle) slot
    DenseMatrix a1 = sys.a1();
    CHECK(std::abs(a1(3, 1) + p.ell) < 1e-15);
    CHECK(a1.max_abs() == doctest::Approx(p.ell));
    CHECK_THROWS_AS(pendulum_system(PendulumParams{0, 1, 1, 1, 1, 1, 1}),
                    InvalidParams);
}

TEST_CASE("pendulum_system: eigenvalues are the roots of h0") {
    PendulumParams p = ref_pend();
    RankOneSystem sys = pendulum_system(p);
    EigenData e = eig_general(sys.A0, sys.B0);
    std::vector<cd> roots = companion_roots(pendulum_h0_coeffs(p));
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(std::abs(e.sigma[k] - roots[k]) < 1e-9 * (1.0 + std::abs(roots[k])));
}

TEST_CASE("pendulum_charfun: matches the matrix characteristic function") {
    PendulumParams p = ref_pend();
    RankOneSystem sys = pendulum_system(p);
    CharacteristicFunction cf = pendulum_charfun(p);
    for (int i = 0; i < 20; ++i) {
        const cd s(urand(-5, 5), urand(-60, 60));
        const cd want = cf.value(s);
        CHECK(std::abs(fa_matrix(sys, s) - want) < 1e-10 * std::abs(want));
    }
}

TEST_CASE("pendulum: h1 roots distinct from h0 roots") {
    PendulumParams p = ref_pend();
    const double mm = p.m_p + p.m_s;
    std::vector<cd> h1roots = companion_roots(
        {p.k_s * p.ell, p.gamma_s * p.ell, p.ell * mm});
    std::vector<cd> h0roots = companion_roots(pendulum_h0_coeffs(p));
    for (const cd& a : h1roots)
        for (const cd& b : h0roots) CHECK(std::abs(a - b) > 1e-6);
}

TEST_CASE("pendulum: base stability over a random parameter grid") {
    for (int t = 0; t < 100; ++t) {
        PendulumParams p{urand(0.5, 50), urand(0.1, 10),  urand(0.5, 20),
                         urand(100, 10000), urand(0.1, 20), urand(1, 200),
                         urand(100, 2000)};
        for (const cd& r : companion_roots(pendulum_h0_coeffs(p)))
            CHECK(r.real() < 0.0);
    }
}

TEST_CASE("pendulum: forced roots track eig_general of A0 + eps A1") {
    PendulumParams p = ref_pend();
    RankOneSystem sys = pendulum_system(p);
    CharacteristicFunction cf = pendulum_charfun(p);
    const double eps = 1e-4;
    DenseMatrix forced = sys.A0 + eps * sys.a1();
    EigenData e = eig_general(forced, sys.B0);
    for (const cd& s : e.sigma)
        CHECK(std::abs(cf.value(s) + eps) < 1e-8);
}

TEST_CASE("faraday: parameter validation and infinite-depth flag") {
    CHECK_THROWS_AS(faraday_charfun(FaradayParams{0, 1, 1, 1, 1, 1}),
                    InvalidParams);
    CHECK(ref_faraday(std::numeric_limits<double>::infinity()).infinite_depth());
    CHECK(!ref_faraday(1.0).infinite_depth());
}

TEST_CASE("faraday finite: f_A continuous across the beta branch cut") {
    // The dispersion function is even in beta, so the principal-branch jump
    // of beta across sigma/nu + alpha^2 < 0 must not show in f_A.
    FaradayParams fp = ref_faraday(1.0);
    CharacteristicFunction cf = faraday_charfun(fp);
    for (double s0 : {-5.0, -20.0, -80.0}) {
        const cd above = cf.value(cd(s0, 1e-9));
        const cd below = cf.value(cd(s0, -1e-9));
        CHECK(std::abs(above - below) < 1e-5 * (1.0 + std::abs(above)));
    }
}

TEST_CASE("faraday finite: surface pair near the inviscid estimate") {
    FaradayParams fp = ref_faraday(1.0);
    CharacteristicFunction cf = faraday_charfun(fp);
    std::vector<cd> roots = cf.enumerate(2);
    const double wi = fp.surface_frequency();
    CHECK(roots[0].real() < 0.0);
    CHECK(roots[1].real() < 0.0);
    CHECK(std::abs(std::abs(roots[0].imag()) - wi) < 0.2 * wi);
    CHECK(std::abs(roots[0] - std::conj(roots[1])) < 1e-8 * std::abs(roots[0]));
}

TEST_CASE("faraday finite: viscous branch interlaces the seed grid") {
    FaradayParams fp = ref_faraday(1.0);
    CharacteristicFunction cf = faraday_charfun(fp);
    std::vector<cd> roots = cf.enumerate(30);
    for (std::size_t k = 2; k < roots.size(); ++k) {
        CHECK(std::abs(roots[k].imag()) < 1e-12);  // overdamped shear modes
        CHECK(roots[k].real() < 0.0);
    }
    // for k >= 5 the k-th viscous root lies within one grid spacing of seeds
    for (std::size_t k = 5; k + 2 < roots.size(); ++k) {
        const double kk = double(k + 1) * kPi / fp.depth;
        const double kk1 = double(k + 2) * kPi / fp.depth;
        const double seed = -fp.nu * (fp.alpha * fp.alpha + kk * kk);
        const double spacing = fp.nu * (kk1 * kk1 - kk * kk);
        CHECK(std::abs(roots[k + 1].real() - seed) < spacing);
    }
}

TEST_CASE("faraday infinite: surface pair only, branch-cut guard") {
    FaradayParams fp = ref_faraday(std::numeric_limits<double>::infinity());
    CharacteristicFunction cf = faraday_charfun(fp);
    std::vector<cd> pair = cf.enumerate(2);
    CHECK(pair[0].real() < 0.0);
    CHECK(std::abs(cf.value(pair[0])) <
          1e-8 * std::abs(cf.derivative(pair[0])) * (1.0 + std::abs(pair[0])));
    CHECK_THROWS_AS(cf.enumerate(3), SeedExhausted);
    // sigma + nu alpha^2 on the negative real axis: principal cut
    const double cut = -fp.nu * fp.alpha * fp.alpha - 3.0;
    CHECK_THROWS_AS(cf.value(cd(cut, 0.0)), BranchCut);
}

TEST_CASE("faraday: finite-depth I_p approaches the infinite-depth value") {
    NoisePsd psd(19.0, 102.0);
    PoleSet poles = poles_residues(psd);
    FaradayParams fpi = ref_faraday(std::numeric_limits<double>::infinity());
    CharacteristicFunction cfi = faraday_charfun(fpi);
    const cd ip_inf = ip_residues(cfi, poles, cfi.enumerate(1)[0]);
    double prev = 1e300;
    for (double depth : {0.5, 1.0, 2.0, 4.0}) {
        FaradayParams fp = ref_faraday(depth);
        CharacteristicFunction cf = faraday_charfun(fp);
        const cd ip = ip_residues(cf, poles, cf.enumerate(1)[0]);
        const double rel = std::abs(ip - ip_inf) / std::abs(ip_inf);
        CHECK(rel < prev);
        prev = rel;
    }
    CHECK(prev < 1e-12);  // converged at L = 4 cm
}

TEST_CASE("kkt_reduce: scalar constraint selects the free coordinate") {
    KktSystem k;
    k.M0 = DenseMatrix::identity(2);
    k.K0 = DenseMatrix(2, 2);
    k.K0(0, 0) = 1.0;
    k.K0(0, 1) = 2.0;
    k.K0(1, 0) = 3.0;
    k.K0(1, 1) = 4.0;
    k.Cc = DenseMatrix(1, 2);
    k.Cc(0, 0) = 1.0;
    k.a = {1.0, 1.0};
    k.b = {1.0, 1.0};
    KktReduced red = kkt_reduce(k);
    REQUIRE(red.P.cols() == 1);
    CHECK(std::abs(std::abs(red.P(1, 0)) - 1.0) < 1e-14);
    CHECK(std::abs(red.P(0, 0)) < 1e-14);
    CHECK(std::abs(red.K0(0, 0) - k.K0(1, 1)) < 1e-14);
    CHECK(std::abs(red.M(0, 0) - 1.0) < 1e-14);
}

TEST_CASE("kkt_reduce: orthonormal null-space basis for random 3x7") {
    DenseMatrix cc(3, 7);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 7; ++j) cc(i, j) = urand(-1, 1);
    KktSystem k;
    k.M0 = DenseMatrix::identity(7);
    k.K0 = DenseMatrix::identity(7);
    k.Cc = cc;
    k.a = Vector(7, cd(1.0));
    k.b = Vector(7, cd(1.0));
    KktReduced red = kkt_reduce(k);
    REQUIRE(red.P.cols() == 4);
    DenseMatrix cp = cc * red.P;
    CHECK(cp.max_abs() < 1e-12);
    DenseMatrix ptp = red.P.adjoint() * red.P;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(std::abs(ptp(i, j) - (i == j ? cd(1.0) : cd(0.0))) < 1e-12);
}

TEST_CASE("kkt_reduce: rejects rank-deficient constraints") {
    DenseMatrix cc(2, 4);
    for (std::size_t j = 0; j < 4; ++j) {
        cc(0, j) = double(j + 1);
        cc(1, j) = 2.0 * double(j + 1);  // duplicate direction
    }
    KktSystem k;
    k.M0 = DenseMatrix::identity(4);
    k.K0 = DenseMatrix::identity(4);
    k.Cc = cc;
    k.a = Vector(4, cd(1.0));
    k.b = Vector(4, cd(1.0));
    CHECK_THROWS_AS(kkt_reduce(k), RankDeficientConstraint);
}

namespace {
// Finite eigenvalues of the full KKT pencil sigma B x = A x via the shifted
// transform (A - s0 B)^{-1} B: theta = 1/(sigma - s0).
std::vector<cd> full_pencil_eigs(const KktSystem& k, cd s0) {
    const std::size_t n = k.M0.rows(), m = k.Cc.rows(), nf = n + m;
    DenseMatrix af(nf, nf), bf(nf, nf);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            af(i, j) = k.K0(i, j);
            bf(i, j) = k.M0(i, j);
        }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            af(n + i, j) = k.Cc(i, j);
            af(j, n + i) = k.Cc(i, j);
        }
    DenseMatrix sm(nf, nf);
    for (std::size_t i = 0; i < nf; ++i)
        for (std::size_t j = 0; j < nf; ++j) sm(i, j) = af(i, j) - s0 * bf(i, j);
    LuFactor lf = lu_factor(sm);
    DenseMatrix t(nf, nf);
    for (std::size_t j = 0; j < nf; ++j) {
        Vector col(nf);
        for (std::size_t i = 0; i < nf; ++i) col[i] = bf(i, j);
        col = lu_solve(lf, col);
        for (std::size_t i = 0; i < nf; ++i) t(i, j) = col[i];
    }
    std::vector<cd> out;
    for (const cd& th : eig_dense(t))
        if (std::abs(th) > 1e-6) out.push_back(s0 + 1.0 / th);
    std::sort(out.begin(), out.end(), eig_order_before);
    return out;
}
}  // namespace

TEST_CASE("kkt_reduce: eigenvalues match the full pencil on 12x12") {
    for (int trial = 0; trial < 3; ++trial) {
        const std::size_t n = 12, m = 3;
        DenseMatrix z(n, n), k0(n, n), cc(m, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                z(i, j) = urand(-1, 1);
                k0(i, j) = urand(-1, 1);
            }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) cc(i, j) = urand(-1, 1);
        DenseMatrix m0 = z.transpose() * z;
        for (std::size_t i = 0; i < n; ++i) m0(i, i) = m0(i, i) + double(n);
        KktSystem k{m0, k0, cc, Vector(n, cd(0.0)), Vector(n, cd(0.0))};
        KktReduced red = kkt_reduce(k);
        EigenData er = eig_general(red.K0, red.M);
        std::vector<cd> full = full_pencil_eigs(k, cd(0.37, 0.21));
        REQUIRE(full.size() == er.sigma.size());
        for (std::size_t i = 0; i < full.size(); ++i) {
            double best = 1e300;
            for (const cd& s : full) best = std::min(best, std::abs(s - er.sigma[i]));
            CHECK(best < 1e-9 * (1.0 + std::abs(er.sigma[i])));
        }
    }
}

TEST_CASE("kkt_reduce: chi products invariant under the reduction") {
    const std::size_t n = 8, m = 2, nf = n + m;
    DenseMatrix z(n, n), k0(n, n), cc(m, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            z(i, j) = urand(-1, 1);
            k0(i, j) = urand(-1, 1);
        }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) cc(i, j) = urand(-1, 1);
    DenseMatrix m0 = z.transpose() * z;
    for (std::size_t i = 0; i < n; ++i) m0(i, i) = m0(i, i) + double(n);
    KktSystem k{m0, k0, cc, Vector(n), Vector(n)};
    for (std::size_t i = 0; i < n; ++i) {
        k.a[i] = urand(-1, 1);
        k.b[i] = urand(-1, 1);
    }
    KktReduced red = kkt_reduce(k);
    RankOneSystem rsys{red.M, red.K0, red.u, red.v};
    EigenData er = eig_general(rsys.A0, rsys.B0);
    DenseMatrix a1r = rsys.a1();
    // Full-space eigenvectors by shift-invert iteration on the KKT pencil.
    DenseMatrix af(nf, nf), bf(nf, nf);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            af(i, j) = k0(i, j);
            bf(i, j) = m0(i, j);
        }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            af(n + i, j) = cc(i, j);
            af(j, n + i) = cc(i, j);
        }
    DenseMatrix a1f(nf, nf);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a1f(i, j) = k.a[i] * k.b[j];
    std::vector<Vector> phi(er.order), psi(er.order);
    for (std::size_t kk = 0; kk < er.order; ++kk) {
        const cd shift = er.sigma[kk] * (1.0 + 1e-9) + cd(0.0, 1e-9);
        DenseMatrix mr(nf, nf), ml(nf, nf);
        for (std::size_t i = 0; i < nf; ++i)
            for (std::size_t j = 0; j < nf; ++j) {
                mr(i, j) = af(i, j) - shift * bf(i, j);
                ml(j, i) = std::conj(af(i, j) - shift * bf(i, j));
            }
        LuFactor fr = lu_factor(mr), fl = lu_factor(ml);
        Vector q(nf), p(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            q[i] = cd(urand(-1, 1), urand(-1, 1));
            p[i] = cd(urand(-1, 1), urand(-1, 1));
        }
        for (int it = 0; it < 4; ++it) {
            q = lu_solve(fr, bf.apply(q));
            scale(q, 1.0 / norm2(q));
            p = lu_solve(fl, bf.adjoint().apply(p));
            scale(p, 1.0 / norm2(p));
        }
        const cd d = dot_c(p, bf.apply(q));
        scale(q, 1.0 / d);
        phi[kk] = q;
        psi[kk] = p;
    }
    // chi_ii and the products chi_ij chi_ji are normalization-invariant.
    for (std::size_t i = 0; i < er.order; ++i) {
        const cd chi_red_ii = chi_matrix(er, a1r, i, i);
        const cd chi_full_ii = dot_c(psi[i], a1f.apply(phi[i]));
        CHECK(std::abs(chi_red_ii - chi_full_ii) <=
              1e-9 * (1.0 + std::abs(chi_red_ii)));
        for (std::size_t j = 0; j < er.order; ++j) {
            const cd red_prod =
                chi_matrix(er, a1r, i, j) * chi_matrix(er, a1r, j, i);
            const cd full_prod = dot_c(psi[i], a1f.apply(phi[j])) *
                                 dot_c(psi[j], a1f.apply(phi[i]));
            CHECK(std::abs(red_prod - full_prod) <=
                  1e-9 * (1.0 + std::abs(red_prod)));
        }
    }
}
