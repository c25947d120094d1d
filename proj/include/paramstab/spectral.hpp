#pragma once

// Two-parameter colored-noise model: power spectral density S(omega) with
// eighth-power shoulders at +-omega0 and bandwidth a, its extension
// G(z) = (1/2pi) int S(omega)/(z - i omega) domega (closed form and
// quadrature oracle), and the pole/residue representation of G.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "paramstab/common.hpp"

namespace paramstab {

struct AtPole : Error {
    explicit AtPole(const std::string& m) : Error(m) {}
};
struct QuadratureFailure : Error {
    explicit QuadratureFailure(const std::string& m) : Error(m) {}
};
struct InvalidPsd : Error {
    explicit InvalidPsd(const std::string& m) : Error(m) {}
};

// ---------------------------------------------------------------------------
// NoisePsd: S(w) = w^4 a^3 / (pi A_nor) [1/(a^8+(w-w0)^8) + 1/(a^8+(w+w0)^8)]
// normalized so that the integral of S over the real line is 1.
// ---------------------------------------------------------------------------
struct NoisePsd {
    double a;       // bandwidth (rad/s)
    double omega0;  // center frequency (rad/s)
    double a_nor;   // normalization constant

    NoisePsd(double bandwidth, double center)
        : a(bandwidth), omega0(center) {
        if (!(a > 0.0)) throw InvalidPsd("NoisePsd: bandwidth a must be > 0");
        if (!(omega0 >= 0.0))
            throw InvalidPsd("NoisePsd: center omega0 must be >= 0");
        const double r2 = std::sqrt(2.0);
        const double w2 = omega0 * omega0, a2 = a * a;
        a_nor = ((1.0 + r2) * (w2 * w2) / (a2 * a2) + 6.0 * w2 / a2 + 1.0) *
                std::sqrt(1.0 - 1.0 / r2);
    }
};

struct PoleSet {
    std::vector<cd> poles;     // mu_m, all with Re < 0
    std::vector<cd> residues;  // r_m, sum = 1/(2 pi)
};

inline double psd_eval(const NoisePsd& m, double omega) {
    const double w4 = omega * omega * omega * omega;
    const double a8 = std::pow(m.a, 8);
    const double dm = std::pow(omega - m.omega0, 8);
    const double dp = std::pow(omega + m.omega0, 8);
    return w4 * m.a * m.a * m.a / (kPi * m.a_nor) *
           (1.0 / (a8 + dm) + 1.0 / (a8 + dp));
}

// The four eighth-root factors in the upper half plane used by the closed
// form: gamma_k = i e^{-3 i pi/8} e^{i k pi/4}, k = 0..3.
inline std::array<cd, 4> psd_gammas() {
    std::array<cd, 4> g;
    const cd base = cd(0.0, 1.0) * std::exp(cd(0.0, -3.0 * kPi / 8.0));
    for (int k = 0; k < 4; ++k)
        g[k] = base * std::exp(cd(0.0, k * kPi / 4.0));
    return g;
}

inline PoleSet poles_residues(const NoisePsd& m) {
    const auto g = psd_gammas();
    const cd denom = cd(0.0, 8.0 * kPi) * std::pow(m.a, 4) * m.a_nor;
    PoleSet ps;
    for (double s : {+1.0, -1.0}) {
        for (int k = 0; k < 4; ++k) {
            const cd w = m.a * g[k] + s * m.omega0;
            const cd w4 = w * w * w * w;
            const cd mu = cd(0.0, 1.0) * w;
            const cd r = g[k] * w4 / denom;
            // Coalesce coincident poles (omega0 = 0 degenerates the two
            // shoulder terms onto the same pole set).
            bool merged = false;
            for (std::size_t i = 0; i < ps.poles.size(); ++i) {
                if (std::abs(ps.poles[i] - mu) <= 1e-12 * m.a) {
                    ps.residues[i] += r;
                    merged = true;
                    break;
                }
            }
            if (!merged) {
                ps.poles.push_back(mu);
                ps.residues.push_back(r);
            }
        }
    }
    return ps;
}

inline cd gz_closed(const NoisePsd& m, cd z) {
    const auto g = psd_gammas();
    cd tot = 0.0;
    for (double s : {+1.0, -1.0}) {
        for (int k = 0; k < 4; ++k) {
            const cd w = m.a * g[k] + s * m.omega0;
            const cd pole = cd(0.0, 1.0) * w;
            if (std::abs(z - pole) <= 1e-12 * m.a)
                throw AtPole("gz_closed: z coincides with a pole of G");
            tot += g[k] * (w * w * w * w) / (z - pole);
        }
    }
    return tot / (cd(0.0, 8.0 * kPi) * std::pow(m.a, 4) * m.a_nor);
}

namespace detail {

// Adaptive Simpson for complex-valued integrands of a real variable.
template <typename F>
cd adaptive_simpson(const F& f, double lo, double hi, double tol,
                    std::size_t& budget) {
    struct Frame {
        double a, b;
        cd fa, fm, fb, whole;
        double tol;
    };
    auto simpson = [&](double a, double b, cd fa, cd fm, cd fb) {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    };
    const double m0 = 0.5 * (lo + hi);
    const cd flo = f(lo), fm0 = f(m0), fhi = f(hi);
    std::vector<Frame> stack{{lo, hi, flo, fm0, fhi,
                              simpson(lo, hi, flo, fm0, fhi), tol}};
    cd total = 0.0;
    while (!stack.empty()) {
        if (budget-- == 0)
            throw QuadratureFailure(
                "gz_quadrature: evaluation budget exhausted");
        Frame fr = stack.back();
        stack.pop_back();
        const double m = 0.5 * (fr.a + fr.b);
        const double lm = 0.5 * (fr.a + m), rm = 0.5 * (m + fr.b);
        const cd flm = f(lm), frm = f(rm);
        const cd left = simpson(fr.a, m, fr.fa, flm, fr.fm);
        const cd right = simpson(m, fr.b, fr.fm, frm, fr.fb);
        const cd delta = left + right - fr.whole;
        if (std::abs(delta) <= 15.0 * fr.tol || (fr.b - fr.a) < 1e-12) {
            total += left + right + delta / 15.0;
        } else {
            stack.push_back({fr.a, m, fr.fa, flm, fr.fm, left, 0.5 * fr.tol});
            stack.push_back({m, fr.b, fr.fm, frm, fr.fb, right, 0.5 * fr.tol});
        }
    }
    return total;
}

}  // namespace detail

// Quadrature oracle for G(z), valid for Re z > 0 where the defining integral
// converges absolutely.  The domain is truncated at W = omega0 + 50 a; the
// neglected tails are bounded analytically using S(w) ~ 2 a^3/(pi A_nor w^4)
// and the truncation is widened until the bound is negligible.
inline cd gz_quadrature(const NoisePsd& m, cd z, double tol = 1e-9) {
    if (!(z.real() > 0.0))
        throw QuadratureFailure("gz_quadrature: requires Re z > 0");
    double w = m.omega0 + 50.0 * m.a;
    for (int i = 0; i < 8; ++i) {
        // |tail| <= (1/2pi) * int_W^inf S / |z - i w| dw, both signs.
        const double tail = 2.0 * (2.0 * std::pow(m.a, 3) /
                                   (kPi * m.a_nor * 3.0 * std::pow(w, 3))) /
                            std::max(std::abs(z), w * 1e-3);
        if (tail / (2.0 * kPi) < 0.1 * tol) break;
        w *= 2.0;
    }
    auto f = [&](double omega) {
        return psd_eval(m, omega) / (z - cd(0.0, omega));
    };
    // Split at the spectral features (the shoulders at +-omega0 and the
    // origin) so the peaks cannot slip between the initial Simpson samples.
    std::vector<double> knots{-w, -m.omega0 - m.a, -m.omega0, -m.omega0 + m.a,
                              0.0, m.omega0 - m.a, m.omega0, m.omega0 + m.a,
                              w};
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    std::size_t budget = 2'000'000;
    cd integral = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (knots[i] < -w || knots[i + 1] > w) continue;
        integral += detail::adaptive_simpson(
            f, knots[i], knots[i + 1], tol / double(knots.size()), budget);
    }
    return integral / (2.0 * kPi);
}

// Normalization check: adaptive quadrature of S over the truncated real
// line plus the analytic omega^-4 tail estimate; should return 1.
inline double psd_normalization(const NoisePsd& m, double tol = 1e-10) {
    const double w = m.omega0 + 50.0 * m.a;
    std::vector<double> knots{
        -w,  -m.omega0 - m.a, -m.omega0, -m.omega0 + m.a, 0.0,
        m.omega0 - m.a, m.omega0, m.omega0 + m.a, w};
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    auto f = [&](double omega) { return cd(psd_eval(m, omega)); };
    std::size_t budget = 2'000'000;
    cd total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        total += detail::adaptive_simpson(f, knots[i], knots[i + 1],
                                          tol / double(knots.size()), budget);
    // Tail: S ~ 2 a^3/(pi A_nor w^4) beyond the shoulders, both sides.
    const double tail =
        2.0 * 2.0 * std::pow(m.a, 3) / (kPi * m.a_nor * 3.0 * w * w * w);
    return total.real() + tail;
}

// Autocorrelation R(tau) = sum_m r_m e^{mu_m tau}, tau >= 0.
inline cd acf_eval(const PoleSet& ps, double tau) {
    if (tau < 0.0) throw Error("acf_eval: tau must be >= 0");
    cd s = 0.0;
    for (std::size_t i = 0; i < ps.poles.size(); ++i)
        s += ps.residues[i] * std::exp(ps.poles[i] * tau);
    return s;
}

}  // namespace paramstab
