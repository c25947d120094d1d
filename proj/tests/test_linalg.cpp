#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "paramstab/linalg.hpp"
#include "paramstab/models.hpp"

using namespace paramstab;

namespace {
std::mt19937 rng(0xfeedbeefu);
double urand(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}
DenseMatrix random_complex(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = cd(urand(-1, 1), urand(-1, 1));
    return m;
}
DenseMatrix random_spd(std::size_t n) {
    DenseMatrix z(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) z(i, j) = urand(-1, 1);
    DenseMatrix m = z.transpose() * z;
    for (std::size_t i = 0; i < n; ++i) m(i, i) = m(i, i) + double(n);
    return m;
}
}  // namespace

TEST_CASE("cholesky: identity") {
    DenseMatrix l = cholesky(DenseMatrix::identity(3));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::abs(l(i, j) - (i == j ? cd(1.0) : cd(0.0))) < 1e-15);
}

TEST_CASE("cholesky: diagonal SPD") {
    DenseMatrix b = DenseMatrix::diag({4.0, 9.0});
    DenseMatrix l = cholesky(b);
    CHECK(std::abs(l(0, 0) - 2.0) < 1e-15);
    CHECK(std::abs(l(1, 1) - 3.0) < 1e-15);
    CHECK(std::abs(l(0, 1)) < 1e-15);
    CHECK(std::abs(l(1, 0)) < 1e-15);
}

TEST_CASE("cholesky: pendulum mass matrix reconstruction") {
    const double ms = 1.0, mp = 0.5, ell = 2.0;
    DenseMatrix m(2, 2);
    m(0, 0) = ms + mp;
    m(0, 1) = ell * mp;
    m(1, 0) = ell * mp;
    m(1, 1) = ell * ell * mp;
    DenseMatrix l = cholesky(m);
    DenseMatrix rec = l * l.transpose();
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(rec(i, j) - m(i, j)) < 1e-14 * m.max_abs());
}

TEST_CASE("cholesky: rejects indefinite input") {
    DenseMatrix b = DenseMatrix::diag({1.0, -1.0});
    CHECK_THROWS_AS(cholesky(b), NotSpd);
}

TEST_CASE("solve: identity") {
    Vector b{cd(1, 2), cd(3, -4)};
    Vector x = solve(DenseMatrix::identity(2), b);
    CHECK(std::abs(x[0] - b[0]) < 1e-15);
    CHECK(std::abs(x[1] - b[1]) < 1e-15);
}

TEST_CASE("solve: diagonal") {
    Vector x = solve(DenseMatrix::diag({2.0, 4.0}), {2.0, 4.0});
    CHECK(std::abs(x[0] - 1.0) < 1e-15);
    CHECK(std::abs(x[1] - 1.0) < 1e-15);
}

TEST_CASE("solve: random 6x6 residual") {
    for (int trial = 0; trial < 5; ++trial) {
        DenseMatrix a = random_complex(6);
        Vector b(6);
        for (auto& v : b) v = cd(urand(-1, 1), urand(-1, 1));
        Vector x = solve(a, b);
        Vector r = a.apply(x);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            num = std::max(num, std::abs(r[i] - b[i]));
            den = std::max(den, std::abs(b[i]));
        }
        CHECK(num < 1e-12 * std::max(den, 1.0) * a.max_abs());
    }
}

TEST_CASE("solve: singular matrix raises") {
    DenseMatrix a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0;
    a(1, 0) = 2.0;
    a(1, 1) = 4.0;
    CHECK_THROWS_AS(solve(a, {1.0, 1.0}), Singular);
}

TEST_CASE("eig_general: diagonal pencil, identity mass") {
    EigenData e = eig_general(DenseMatrix::diag({-1.0, -2.0}),
                              DenseMatrix::identity(2));
    CHECK(std::abs(e.sigma[0] - cd(-1.0)) < 1e-12);
    CHECK(std::abs(e.sigma[1] - cd(-2.0)) < 1e-12);
    // phi_k, psi_k proportional to e_k with <psi, phi>_B = 1
    CHECK(std::abs(e.phi[0][1]) < 1e-10);
    CHECK(std::abs(e.psi[0][1]) < 1e-10);
    CHECK(std::abs(dot_c(e.psi[0], e.phi[0]) - cd(1.0)) < 1e-10);
}

TEST_CASE("eig_general: diagonal pencil, diagonal mass") {
    EigenData e = eig_general(DenseMatrix::diag({-2.0, -6.0}),
                              DenseMatrix::diag({2.0, 3.0}));
    CHECK(std::abs(e.sigma[0] - cd(-1.0)) < 1e-12);
    CHECK(std::abs(e.sigma[1] - cd(-2.0)) < 1e-12);
}

TEST_CASE("eig_general: pendulum eigenvalues match companion roots of h0") {
    PendulumParams p{10.0, 1.0, 5.0, 4000.0, 2.0, 50.0, 981.0};
    RankOneSystem sys = pendulum_system(p);
    EigenData e = eig_general(sys.A0, sys.B0);
    std::vector<cd> hroots = companion_roots(pendulum_h0_coeffs(p));
    REQUIRE(e.sigma.size() == 4);
    REQUIRE(hroots.size() == 4);
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(std::abs(e.sigma[k] - hroots[k]) < 1e-9 * (1.0 + std::abs(hroots[k])));
}

TEST_CASE("eig_general: invariants on pendulum and random pencils") {
    PendulumParams p{10.0, 1.0, 5.0, 4000.0, 2.0, 50.0, 981.0};
    RankOneSystem sys = pendulum_system(p);
    struct Pencil {
        DenseMatrix a0, b0;
    };
    std::vector<Pencil> pencils{{sys.A0, sys.B0}};
    for (int t = 0; t < 3; ++t) {
        DenseMatrix a0(12, 12);
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t j = 0; j < 12; ++j) a0(i, j) = urand(-1, 1);
        pencils.push_back({a0, random_spd(12)});
    }
    for (const Pencil& pc : pencils) {
        const std::size_t n = pc.a0.rows();
        EigenData e = eig_general(pc.a0, pc.b0);
        const double anorm = pc.a0.max_abs();
        for (std::size_t k = 0; k < n; ++k) {
            Vector r1 = pc.a0.apply(e.phi[k]), r2 = pc.b0.apply(e.phi[k]);
            Vector l1 = pc.a0.adjoint().apply(e.psi[k]),
                   l2 = pc.b0.apply(e.psi[k]);
            double res = 0.0, ares = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                res = std::max(res, std::abs(r1[i] - e.sigma[k] * r2[i]));
                ares = std::max(
                    ares, std::abs(l1[i] - std::conj(e.sigma[k]) * l2[i]));
            }
            CHECK(res <= 1e-10 * anorm * norm2(e.phi[k]));
            CHECK(ares <= 1e-10 * anorm * norm2(e.psi[k]));
            for (std::size_t j = 0; j < n; ++j) {
                const cd d = dot_c(e.psi[k], pc.b0.apply(e.phi[j]));
                CHECK(std::abs(d - (k == j ? cd(1.0) : cd(0.0))) <= 1e-10);
            }
        }
        // conjugate pairing (real inputs)
        for (std::size_t k = 0; k < n; ++k) {
            double best = 1e300;
            for (std::size_t j = 0; j < n; ++j)
                best = std::min(best,
                                std::abs(std::conj(e.sigma[k]) - e.sigma[j]));
            CHECK(best < 1e-10 * (1.0 + std::abs(e.sigma[k])));
        }
        // spectral reconstruction of B0^-1 A0 acting on a random vector
        Vector x(n);
        for (auto& v : x) v = cd(urand(-1, 1), urand(-1, 1));
        Vector want = solve(pc.b0, pc.a0.apply(x));
        Vector got(n, cd(0.0));
        for (std::size_t k = 0; k < n; ++k) {
            const cd w = e.sigma[k] * dot_c(e.psi[k], pc.b0.apply(x));
            for (std::size_t i = 0; i < n; ++i) got[i] += w * e.phi[k][i];
        }
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err = std::max(err, std::abs(got[i] - want[i]));
            scale = std::max(scale, std::abs(want[i]));
        }
        CHECK(err <= 1e-8 * std::max(scale, 1.0));
    }
}

TEST_CASE("companion_roots: quadratics") {
    std::vector<cd> r1 = companion_roots({-1.0, 0.0, 1.0});  // s^2 - 1
    CHECK(std::abs(r1[0] - cd(1.0)) < 1e-12);
    CHECK(std::abs(r1[1] - cd(-1.0)) < 1e-12);
    std::vector<cd> r2 = companion_roots({1.0, 0.0, 1.0});  // s^2 + 1
    CHECK(std::abs(r2[0] - cd(0.0, 1.0)) < 1e-12);
    CHECK(std::abs(r2[1] - cd(0.0, -1.0)) < 1e-12);
}

TEST_CASE("companion_roots: rejects constants") {
    CHECK_THROWS_AS(companion_roots({3.0}), DegreeZero);
}

TEST_CASE("companion_roots: pendulum quartic cross-oracle") {
    PendulumParams p{10.0, 1.0, 5.0, 4000.0, 2.0, 50.0, 981.0};
    RankOneSystem sys = pendulum_system(p);
    EigenData e = eig_general(sys.A0, sys.B0);
    std::vector<cd> roots = companion_roots(pendulum_h0_coeffs(p));
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(std::abs(roots[k] - e.sigma[k]) < 1e-9 * (1.0 + std::abs(roots[k])));
}

TEST_CASE("solve composed with matmul is identity") {
    for (int trial = 0; trial < 5; ++trial) {
        DenseMatrix a = random_complex(7);
        Vector x(7);
        for (auto& v : x) v = cd(urand(-1, 1), urand(-1, 1));
        Vector y = solve(a, a.apply(x));
        double err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < 7; ++i) {
            err = std::max(err, std::abs(y[i] - x[i]));
            scale = std::max(scale, std::abs(x[i]));
        }
        CHECK(err <= 1e-11 * std::max(scale, 1.0));
    }
}
