#pragma once

// Second-moment stability engine.  The growth rate of the least stable
// second-moment mode is lambda = lambda0 + eps^2 lambda2 with
// lambda0 = sigma_p + sigma_q.  I_p is evaluated two independent ways:
//   eigen-sum : I_p = sum_k chi_pk chi_kp G(sigma_p - sigma_k)
//   residues  : I_p = (1/f_A'(sigma_p)) sum_m r_m / f_A(sigma_p - mu_m)
// and lambda2 both by the expanded closed formula and by the literal
// double sum over modes (oracle).

#include <cmath>
#include <limits>

#include "paramstab/charfun.hpp"
#include "paramstab/spectral.hpp"

namespace paramstab {

struct ResonantArgument : Error {
    explicit ResonantArgument(const std::string& m) : Error(m) {}
};
struct ResonantPole : Error {
    explicit ResonantPole(const std::string& m) : Error(m) {}
};
struct UnstableBase : Error {
    explicit UnstableBase(const std::string& m) : Error(m) {}
};

using GzEvaluator = std::function<cd(cd)>;

struct ModePair {
    std::size_t p = 0, q = 0;  // p <= q
    cd sigma_p, sigma_q;
    cd lambda0;  // sigma_p + sigma_q
};

inline ModePair make_mode_pair(const std::vector<cd>& sigmas, std::size_t p,
                               std::size_t q) {
    ModePair mp;
    mp.p = std::min(p, q);
    mp.q = std::max(p, q);
    mp.sigma_p = sigmas[mp.p];
    mp.sigma_q = sigmas[mp.q];
    mp.lambda0 = mp.sigma_p + mp.sigma_q;
    return mp;
}

struct StabilityReport {
    ModePair pair;
    cd lambda2 = 0.0;
    double epsilon = 0.0;
    cd lambda = 0.0;  // lambda0 + eps^2 lambda2
    double epsilon_crit = std::numeric_limits<double>::infinity();
    std::string method = "residues";
    std::vector<std::string> diagnostics;
};

// chi_ij = <psi_i, A1 phi_j> under the standard (conjugating) inner product.
inline cd chi_matrix(const EigenData& eig, const DenseMatrix& a1,
                     std::size_t i, std::size_t j) {
    return dot_c(eig.psi[i], a1.apply(eig.phi[j]));
}

// All chi_pk * chi_kp products for a fixed p, from the eigenvector data.
inline std::vector<cd> chi_products(const EigenData& eig,
                                    const DenseMatrix& a1, std::size_t p) {
    std::vector<cd> out(eig.order);
    for (std::size_t k = 0; k < eig.order; ++k)
        out[k] = chi_matrix(eig, a1, p, k) * chi_matrix(eig, a1, k, p);
    return out;
}

// chi_pk chi_kp from the characteristic function (Lemma-2 route):
// chi_pk chi_kp = 1 / (f_A'(sigma_k) f_A'(sigma_p)).
inline std::vector<cd> chi_products(const CharacteristicFunction& cf,
                                    const std::vector<cd>& sigmas,
                                    std::size_t p) {
    const cd fpp = cf.derivative(sigmas[p]);
    std::vector<cd> out(sigmas.size());
    for (std::size_t k = 0; k < sigmas.size(); ++k)
        out[k] = 1.0 / (cf.derivative(sigmas[k]) * fpp);
    return out;
}

// Truncated eigen-sum.  The first N entries of `sigmas` are summed in the
// order supplied by the caller (the enumerator fixes a deterministic mode
// ordering; see models.hpp for the dispersion-relation convention).
inline cd ip_eigensum(const std::vector<cd>& sigmas,
                      const std::vector<cd>& chi_prods, const GzEvaluator& gz,
                      std::size_t p, std::size_t n) {
    if (n > sigmas.size() || n > chi_prods.size())
        throw Error("ip_eigensum: truncation N exceeds available modes");
    cd s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        try {
            s += chi_prods[k] * gz(sigmas[p] - sigmas[k]);
        } catch (const AtPole&) {
            throw ResonantArgument(
                "ip_eigensum: sigma_p - sigma_k at a pole of G");
        }
    }
    return s;
}

// Exact residue-path evaluation over the poles of G.
inline cd ip_residues(const CharacteristicFunction& cf, const PoleSet& poles,
                      cd sigma_p, std::vector<std::string>* warnings = nullptr) {
    const cd fpp = cf.derivative(sigma_p);
    const double freq_scale = 1.0 + std::abs(sigma_p);
    if (std::abs(fpp) < 1e-14)
        throw DegenerateMode("ip_residues: f_A'(sigma_p) ~ 0");
    cd s = 0.0;
    for (std::size_t m = 0; m < poles.poles.size(); ++m) {
        const cd fv = cf.value(sigma_p - poles.poles[m]);
        const double mag = std::abs(fv);
        if (mag < 1e-10 * std::abs(fpp) * freq_scale)
            throw ResonantPole(
                "ip_residues: f_A(sigma_p - mu_m) ~ 0, I_p diverges");
        if (mag < 1e-6 * std::abs(fpp) * freq_scale && warnings)
            warnings->push_back(
                "near-resonant pole term m=" + std::to_string(m));
        s += poles.residues[m] / fv;
    }
    return s / fpp;
}

namespace detail {

inline cd lambda2_expanded(cd chi_pp_qq, cd chi_pq_qp, cd ip, cd iq,
                           bool same, const GzEvaluator& gz, cd sp, cd sq) {
    const double dpq = same ? 1.0 : 0.0;
    const cd g0 = gz(cd(0.0));
    const cd cross = same ? 2.0 * g0 : gz(sp - sq) + gz(sq - sp);
    return (1.0 / (2.0 * (1.0 + dpq))) *
           (4.0 * chi_pp_qq * g0 + 2.0 * chi_pq_qp * cross +
            2.0 * (ip + iq + 2.0 * dpq * ip));
}

}  // namespace detail

// Expanded lambda2 with chi products and I_p from the characteristic
// function (residue path): chi_pp chi_qq = chi_pq chi_qp
// = 1/(f_A'(sigma_p) f_A'(sigma_q)).
inline cd lambda2(const CharacteristicFunction& cf, const GzEvaluator& gz,
                  const PoleSet& poles, const ModePair& pair) {
    const cd fpp = cf.derivative(pair.sigma_p);
    const cd fpq = cf.derivative(pair.sigma_q);
    if (std::abs(fpp) < 1e-14 || std::abs(fpq) < 1e-14)
        throw DegenerateMode("lambda2: vanishing f_A' at a selected mode");
    const cd prod = 1.0 / (fpp * fpq);
    const bool same = pair.p == pair.q;
    const cd ip = ip_residues(cf, poles, pair.sigma_p);
    const cd iq = same ? ip : ip_residues(cf, poles, pair.sigma_q);
    return detail::lambda2_expanded(prod, prod, ip, iq, same, gz,
                                    pair.sigma_p, pair.sigma_q);
}

// Expanded lambda2 with chi products from the characteristic function and
// I_p by truncated eigen-sum (dispersion-relation systems, where matrix
// eigenvectors are unavailable).
inline cd lambda2_eigensum(const CharacteristicFunction& cf,
                           const std::vector<cd>& sigmas,
                           const GzEvaluator& gz, const ModePair& pair,
                           std::size_t n) {
    const cd fpp = cf.derivative(pair.sigma_p);
    const cd fpq = cf.derivative(pair.sigma_q);
    if (std::abs(fpp) < 1e-14 || std::abs(fpq) < 1e-14)
        throw DegenerateMode(
            "lambda2_eigensum: vanishing f_A' at a selected mode");
    const cd prod = 1.0 / (fpp * fpq);
    const bool same = pair.p == pair.q;
    const cd ip =
        ip_eigensum(sigmas, chi_products(cf, sigmas, pair.p), gz, pair.p, n);
    const cd iq = same ? ip
                       : ip_eigensum(sigmas, chi_products(cf, sigmas, pair.q),
                                     gz, pair.q, n);
    return detail::lambda2_expanded(prod, prod, ip, iq, same, gz,
                                    pair.sigma_p, pair.sigma_q);
}

// Expanded lambda2 with matrix chi and eigen-sum I_p truncated at N modes.
inline cd lambda2(const EigenData& eig, const DenseMatrix& a1,
                  const GzEvaluator& gz, const ModePair& pair,
                  std::size_t n) {
    const bool same = pair.p == pair.q;
    const cd chi_pp = chi_matrix(eig, a1, pair.p, pair.p);
    const cd chi_qq = chi_matrix(eig, a1, pair.q, pair.q);
    const cd chi_pq_qp =
        chi_matrix(eig, a1, pair.p, pair.q) * chi_matrix(eig, a1, pair.q, pair.p);
    const cd ip =
        ip_eigensum(eig.sigma, chi_products(eig, a1, pair.p), gz, pair.p, n);
    const cd iq = same ? ip
                       : ip_eigensum(eig.sigma, chi_products(eig, a1, pair.q),
                                     gz, pair.q, n);
    return detail::lambda2_expanded(chi_pp * chi_qq, chi_pq_qp, ip, iq, same,
                                    gz, pair.sigma_p, pair.sigma_q);
}

// Literal double sum over all modes (oracle):
// lambda2 = 8 sum_{j,k} C_jkpq C_pqjk / (1+delta_pq) G(s_p+s_q-s_j-s_k),
// C_jklm = 1/4 (d_jm chi_kl + d_km chi_jl + d_jl chi_km + d_kl chi_jm).
inline cd lambda2_bruteforce(const EigenData& eig, const DenseMatrix& a1,
                             const GzEvaluator& gz, const ModePair& pair) {
    const std::size_t n = eig.order;
    DenseMatrix chi(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) chi(i, j) = chi_matrix(eig, a1, i, j);
    auto cc = [&](std::size_t j, std::size_t k, std::size_t l,
                  std::size_t m) {
        cd s = 0.0;
        if (j == m) s += chi(k, l);
        if (k == m) s += chi(j, l);
        if (j == l) s += chi(k, m);
        if (k == l) s += chi(j, m);
        return 0.25 * s;
    };
    const double dpq = (pair.p == pair.q) ? 1.0 : 0.0;
    cd total = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            const cd w = cc(j, k, pair.p, pair.q) * cc(pair.p, pair.q, j, k);
            if (w == cd(0.0)) continue;
            cd g;
            try {
                g = gz(pair.sigma_p + pair.sigma_q - eig.sigma[j] -
                       eig.sigma[k]);
            } catch (const AtPole&) {
                throw ResonantArgument(
                    "lambda2_bruteforce: sum argument at a pole of G");
            }
            total += w * g;
        }
    return 8.0 * total / (1.0 + dpq);
}

// lambda(eps) = lambda0 + eps^2 lambda2; stable iff Re lambda < 0.
inline std::pair<cd, bool> stability_margin(const ModePair& pair, cd lambda2,
                                            double epsilon) {
    const cd lambda = pair.lambda0 + epsilon * epsilon * lambda2;
    return {lambda, lambda.real() < 0.0};
}

// Enumerate mode pairs among the top_k least-damped modes and pick the one
// with the smallest critical forcing amplitude.
inline StabilityReport select_mode_pair(
    const std::vector<cd>& sigmas,
    const std::function<cd(const ModePair&)>& lambda2_eval,
    std::size_t top_k = 8) {
    for (const cd& s : sigmas)
        if (s.real() >= 0.0)
            throw UnstableBase(
                "select_mode_pair: unforced system has Re sigma >= 0");
    const std::size_t kmax = std::min(top_k, sigmas.size());
    StabilityReport best;
    bool have = false;
    for (std::size_t p = 0; p < kmax; ++p) {
        for (std::size_t q = p; q < kmax; ++q) {
            ModePair mp = make_mode_pair(sigmas, p, q);
            StabilityReport r;
            r.pair = mp;
            r.lambda2 = lambda2_eval(mp);
            if (r.lambda2.real() > 0.0)
                r.epsilon_crit =
                    std::sqrt(-mp.lambda0.real() / r.lambda2.real());
            else
                r.epsilon_crit = std::numeric_limits<double>::infinity();
            const bool better =
                !have || r.epsilon_crit < best.epsilon_crit ||
                (r.epsilon_crit == best.epsilon_crit &&
                 (mp.lambda0.real() < best.pair.lambda0.real() ||
                  (mp.lambda0.real() == best.pair.lambda0.real() &&
                   (mp.p < best.pair.p ||
                    (mp.p == best.pair.p && mp.q < best.pair.q)))));
            if (better) {
                best = r;
                have = true;
            }
        }
    }
    if (!have) throw Error("select_mode_pair: no modes available");
    return best;
}

}  // namespace paramstab
