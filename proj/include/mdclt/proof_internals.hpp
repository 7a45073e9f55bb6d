#pragma once

// Exact verification of the martingale decomposition for finite-support
// 1-dependent chains X_i = g_i(eps_i, eps_{i+1}).
//
//   Y_i = X_i - E(X_i|F_{i-1}) + E(X_{i+1}|F_i),   F_i = sigma(X_1..X_i)
//
// Everything is computed by exhaustive enumeration of the innovation product
// space. Outcome probabilities are exact integer numerators over W^{N+1}
// (W = sum of the pmf weights); value-weighted expectations use long-double
// compensated sums, so identity checks hold to ~1e-14 relative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mdclt/common.hpp"
#include "mdclt/errors.hpp"
#include "mdclt/rng.hpp"

namespace mdclt {

struct FiniteChain {
    std::vector<double> alphabet;        // innovation values
    std::vector<std::uint32_t> weights;  // pmf numerators (prob = w / sum w)
    int n = 1;                           // chain length N
    // link[i] is row-major |A| x |A|: X_{i+1} = link[i][e_i * A + e_{i+1}]
    std::vector<std::vector<double>> link;

    std::size_t alphabet_size() const { return alphabet.size(); }
    std::uint64_t weight_sum() const {
        std::uint64_t s = 0;
        for (auto w : weights) s += w;
        return s;
    }
};

namespace detail {

inline void validate_chain(const FiniteChain& chain) {
    const std::size_t a = chain.alphabet_size();
    if (a < 2) throw invalid_spec_error("FiniteChain: alphabet needs at least 2 values");
    if (chain.weights.size() != a) throw invalid_spec_error("FiniteChain: weights/alphabet mismatch");
    for (auto w : chain.weights)
        if (w == 0) throw invalid_spec_error("FiniteChain: weights must be positive");
    if (chain.n < 1 || chain.n > 12) throw invalid_spec_error("FiniteChain: N must lie in [1,12]");
    if (chain.link.size() != static_cast<std::size_t>(chain.n))
        throw invalid_spec_error("FiniteChain: need one link map per coordinate");
    for (const auto& g : chain.link)
        if (g.size() != a * a) throw invalid_spec_error("FiniteChain: link map has wrong size");

    // E(X_i) = 0 exactly (up to float) under the pmf
    const double wsum = static_cast<double>(chain.weight_sum());
    for (const auto& g : chain.link) {
        long double mean = 0.0L;
        for (std::size_t e1 = 0; e1 < a; ++e1)
            for (std::size_t e2 = 0; e2 < a; ++e2)
                mean += static_cast<long double>(chain.weights[e1]) * chain.weights[e2] *
                        g[e1 * a + e2];
        mean /= static_cast<long double>(wsum) * wsum;
        if (std::abs(static_cast<double>(mean)) > 1e-14)
            throw invalid_spec_error("FiniteChain: coordinates must have mean zero");
    }
}

} // namespace detail

struct MartingaleTrace {
    FiniteChain chain;
    int n = 0;
    std::int64_t n_outcomes = 0;
    double prob_den = 1.0;              // W^{N+1}
    std::vector<std::uint64_t> prob;    // exact numerators per outcome

    // per-outcome arrays; index [i] runs 1..n (slot 0 unused where noted)
    std::vector<std::vector<double>> x;        // x[i][w]
    std::vector<std::vector<std::int32_t>> atom;  // atom[l][w], level 0..n
    std::vector<std::int32_t> atom_count;         // atoms per level
    std::vector<std::vector<double>> cexp_x;      // cexp_x[i] = E(X_i|F_{i-1}), i = 1..n+1
    std::vector<std::vector<double>> y;           // y[i][w]
    std::vector<std::vector<double>> cexp_y2;     // E(Y_i^2|F_{i-1})
    std::vector<std::vector<double>> w_cum;       // w_cum[i][w] = sum_{j<=i} cexp_y2[j]/sigma2
    std::vector<double> v2;                       // V^2 per outcome
    std::vector<int> tau;
    double sigma2 = 0.0;
    double sigma = 0.0;
    double max_abs_x = 0.0;
    double gamma = 0.0;  // 3 * max|X| / sigma, the smallest admissible constant

    // E(values | F_level) as a per-outcome vector (constant on atoms).
    std::vector<double> cond_exp(int level, std::span<const double> values) const {
        const std::int32_t n_atoms = atom_count[static_cast<std::size_t>(level)];
        std::vector<long double> num(static_cast<std::size_t>(n_atoms), 0.0L);
        std::vector<std::uint64_t> den(static_cast<std::size_t>(n_atoms), 0);
        const auto& at = atom[static_cast<std::size_t>(level)];
        for (std::int64_t w = 0; w < n_outcomes; ++w) {
            const auto aid = static_cast<std::size_t>(at[static_cast<std::size_t>(w)]);
            num[aid] += static_cast<long double>(prob[static_cast<std::size_t>(w)]) *
                        values[static_cast<std::size_t>(w)];
            den[aid] += prob[static_cast<std::size_t>(w)];
        }
        std::vector<double> out(static_cast<std::size_t>(n_outcomes));
        for (std::int64_t w = 0; w < n_outcomes; ++w) {
            const auto aid = static_cast<std::size_t>(at[static_cast<std::size_t>(w)]);
            out[static_cast<std::size_t>(w)] =
                static_cast<double>(num[aid] / static_cast<long double>(den[aid]));
        }
        return out;
    }

    double expectation(std::span<const double> values) const {
        long double acc = 0.0L;
        for (std::int64_t w = 0; w < n_outcomes; ++w)
            acc += static_cast<long double>(prob[static_cast<std::size_t>(w)]) *
                   values[static_cast<std::size_t>(w)];
        return static_cast<double>(acc / static_cast<long double>(prob_den));
    }
};

inline MartingaleTrace martingale_decompose(const FiniteChain& chain) {
    detail::validate_chain(chain);
    const std::size_t a = chain.alphabet_size();
    const int n = chain.n;

    double n_out_d = 1.0;
    for (int i = 0; i <= n; ++i) {
        n_out_d *= static_cast<double>(a);
        if (n_out_d > 2e6) throw enumeration_limit_error("FiniteChain: outcome space too large");
    }
    const auto n_out = static_cast<std::int64_t>(n_out_d);
    const double wsum = static_cast<double>(chain.weight_sum());
    if ((n + 1) * std::log2(wsum) > 62.0)
        throw enumeration_limit_error("FiniteChain: probability numerators would overflow");

    MartingaleTrace tr;
    tr.chain = chain;
    tr.n = n;
    tr.n_outcomes = n_out;
    tr.prob_den = std::pow(wsum, n + 1);
    tr.prob.resize(static_cast<std::size_t>(n_out));
    tr.x.assign(static_cast<std::size_t>(n) + 1, {});
    for (int i = 1; i <= n; ++i) tr.x[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(n_out));

    std::vector<std::size_t> digits(static_cast<std::size_t>(n + 1));
    for (std::int64_t w = 0; w < n_out; ++w) {
        std::int64_t rem = w;
        std::uint64_t p = 1;
        for (int d = 0; d <= n; ++d) {
            digits[static_cast<std::size_t>(d)] = static_cast<std::size_t>(rem % static_cast<std::int64_t>(a));
            rem /= static_cast<std::int64_t>(a);
            p *= chain.weights[digits[static_cast<std::size_t>(d)]];
        }
        tr.prob[static_cast<std::size_t>(w)] = p;
        for (int i = 1; i <= n; ++i) {
            const double xv = chain.link[static_cast<std::size_t>(i - 1)]
                                        [digits[static_cast<std::size_t>(i - 1)] * a +
                                         digits[static_cast<std::size_t>(i)]];
            tr.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)] = xv;
            tr.max_abs_x = std::max(tr.max_abs_x, std::abs(xv));
        }
    }

    // filtration atoms by refinement on the observed X-prefix
    tr.atom.assign(static_cast<std::size_t>(n) + 1, std::vector<std::int32_t>(static_cast<std::size_t>(n_out), 0));
    tr.atom_count.assign(static_cast<std::size_t>(n) + 1, 1);
    for (int l = 1; l <= n; ++l) {
        std::map<std::pair<std::int32_t, std::uint64_t>, std::int32_t> ids;
        auto& cur = tr.atom[static_cast<std::size_t>(l)];
        const auto& prev = tr.atom[static_cast<std::size_t>(l - 1)];
        const auto& xs = tr.x[static_cast<std::size_t>(l)];
        for (std::int64_t w = 0; w < n_out; ++w) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(double));
            std::memcpy(&bits, &xs[static_cast<std::size_t>(w)], sizeof(bits));
            const auto key = std::make_pair(prev[static_cast<std::size_t>(w)], bits);
            auto [it, inserted] = ids.emplace(key, static_cast<std::int32_t>(ids.size()));
            cur[static_cast<std::size_t>(w)] = it->second;
        }
        tr.atom_count[static_cast<std::size_t>(l)] = static_cast<std::int32_t>(ids.size());
    }

    // sigma^2 = E(S^2)
    {
        std::vector<double> s2(static_cast<std::size_t>(n_out), 0.0);
        for (std::int64_t w = 0; w < n_out; ++w) {
            double s = 0.0;
            for (int i = 1; i <= n; ++i) s += tr.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)];
            s2[static_cast<std::size_t>(w)] = s * s;
        }
        tr.sigma2 = tr.expectation(s2);
    }
    if (!(tr.sigma2 > 0.0)) throw invalid_spec_error("FiniteChain: sigma^2 must be > 0");
    tr.sigma = std::sqrt(tr.sigma2);
    tr.gamma = 3.0 * tr.max_abs_x / tr.sigma;

    // conditional expectations: cexp_x[i] = E(X_i|F_{i-1}); the same vector
    // serves as E(X_{i+1}|F_i) one level down, which makes the telescoping
    // cancellation in sum(Y_i) exact.
    tr.cexp_x.assign(static_cast<std::size_t>(n) + 2, {});
    for (int i = 1; i <= n; ++i)
        tr.cexp_x[static_cast<std::size_t>(i)] = tr.cond_exp(i - 1, tr.x[static_cast<std::size_t>(i)]);
    tr.cexp_x[static_cast<std::size_t>(n) + 1].assign(static_cast<std::size_t>(n_out), 0.0);  // X_{N+1} = 0

    tr.y.assign(static_cast<std::size_t>(n) + 1, {});
    for (int i = 1; i <= n; ++i) {
        auto& yi = tr.y[static_cast<std::size_t>(i)];
        yi.resize(static_cast<std::size_t>(n_out));
        const auto& xi = tr.x[static_cast<std::size_t>(i)];
        const auto& ai = tr.cexp_x[static_cast<std::size_t>(i)];
        const auto& bi = tr.cexp_x[static_cast<std::size_t>(i) + 1];
        for (std::int64_t w = 0; w < n_out; ++w)
            yi[static_cast<std::size_t>(w)] = xi[static_cast<std::size_t>(w)] -
                                              ai[static_cast<std::size_t>(w)] +
                                              bi[static_cast<std::size_t>(w)];
    }

    tr.cexp_y2.assign(static_cast<std::size_t>(n) + 1, {});
    std::vector<double> y2(static_cast<std::size_t>(n_out));
    for (int i = 1; i <= n; ++i) {
        const auto& yi = tr.y[static_cast<std::size_t>(i)];
        for (std::int64_t w = 0; w < n_out; ++w) {
            const double v = yi[static_cast<std::size_t>(w)];
            y2[static_cast<std::size_t>(w)] = v * v;
        }
        tr.cexp_y2[static_cast<std::size_t>(i)] = tr.cond_exp(i - 1, y2);
    }

    tr.w_cum.assign(static_cast<std::size_t>(n) + 1, std::vector<double>(static_cast<std::size_t>(n_out), 0.0));
    tr.v2.assign(static_cast<std::size_t>(n_out), 0.0);
    for (int i = 1; i <= n; ++i) {
        const auto& e = tr.cexp_y2[static_cast<std::size_t>(i)];
        auto& wi = tr.w_cum[static_cast<std::size_t>(i)];
        const auto& wp = tr.w_cum[static_cast<std::size_t>(i - 1)];
        for (std::int64_t w = 0; w < n_out; ++w) {
            tr.v2[static_cast<std::size_t>(w)] += e[static_cast<std::size_t>(w)];
            wi[static_cast<std::size_t>(w)] =
                wp[static_cast<std::size_t>(w)] + e[static_cast<std::size_t>(w)] / tr.sigma2;
        }
    }

    // tau = max{m : W_m <= 1}; the set always contains m = 1 since
    // W_1 = E(Y_1^2)/sigma^2 <= 1.
    tr.tau.assign(static_cast<std::size_t>(n_out), 1);
    for (std::int64_t w = 0; w < n_out; ++w) {
        int t = 1;
        for (int m = 2; m <= n; ++m)
            if (tr.w_cum[static_cast<std::size_t>(m)][static_cast<std::size_t>(w)] <= 1.0) t = m;
        tr.tau[static_cast<std::size_t>(w)] = t;
    }

    return tr;
}

struct IdentityReport {
    double max_cond_y_dev = 0.0;     // max_i max_atoms |E(Y_i | F_{i-1})|
    double max_sum_dev = 0.0;        // max_w |sum_i Y_i - S| / scale
    double sum_ey2_rel_dev = 0.0;    // |sum_i E(Y_i^2) - sigma^2| / sigma^2
    double max_martingale_dev = 0.0; // max_{i<k} max |E(Y_k | F_i)|
    std::string offending;

    bool ok(double tol = 1e-12) const {
        return max_cond_y_dev <= tol && max_sum_dev <= tol && sum_ey2_rel_dev <= tol &&
               max_martingale_dev <= tol;
    }
};

inline IdentityReport verify_identities(const MartingaleTrace& tr, double tol = 1e-12) {
    IdentityReport rep;
    const std::int64_t n_out = tr.n_outcomes;
    const double scale = std::max(1.0, tr.sigma);

    for (int i = 1; i <= tr.n; ++i) {
        auto ce = tr.cond_exp(i - 1, tr.y[static_cast<std::size_t>(i)]);
        for (std::int64_t w = 0; w < n_out; ++w)
            rep.max_cond_y_dev =
                std::max(rep.max_cond_y_dev, std::abs(ce[static_cast<std::size_t>(w)]) / scale);
        if (rep.max_cond_y_dev > tol && rep.offending.empty())
            rep.offending = "E(Y_" + std::to_string(i) + "|F_" + std::to_string(i - 1) + ") != 0";
    }

    for (std::int64_t w = 0; w < n_out; ++w) {
        double ysum = 0.0, s = 0.0;
        for (int i = 1; i <= tr.n; ++i) {
            ysum += tr.y[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)];
            s += tr.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)];
        }
        rep.max_sum_dev = std::max(rep.max_sum_dev, std::abs(ysum - s) / scale);
    }
    if (rep.max_sum_dev > tol && rep.offending.empty()) rep.offending = "sum Y_i != S";

    {
        KahanSum total;
        std::vector<double> y2(static_cast<std::size_t>(n_out));
        for (int i = 1; i <= tr.n; ++i) {
            const auto& yi = tr.y[static_cast<std::size_t>(i)];
            for (std::int64_t w = 0; w < n_out; ++w) {
                const double v = yi[static_cast<std::size_t>(w)];
                y2[static_cast<std::size_t>(w)] = v * v;
            }
            total.add(tr.expectation(y2));
        }
        rep.sum_ey2_rel_dev = std::abs(total.value() - tr.sigma2) / tr.sigma2;
        if (rep.sum_ey2_rel_dev > tol && rep.offending.empty())
            rep.offending = "sum E(Y_i^2) != sigma^2";
    }

    // partial-sum martingale: E(Y_k | F_i) = 0 for every k > i
    for (int i = 0; i < tr.n; ++i) {
        for (int k = i + 1; k <= tr.n; ++k) {
            auto ce = tr.cond_exp(i, tr.y[static_cast<std::size_t>(k)]);
            for (std::int64_t w = 0; w < n_out; ++w)
                rep.max_martingale_dev = std::max(rep.max_martingale_dev,
                                                  std::abs(ce[static_cast<std::size_t>(w)]) / scale);
        }
    }
    if (rep.max_martingale_dev > tol && rep.offending.empty())
        rep.offending = "E(Y_k|F_i) != 0 for some k > i";
    return rep;
}

struct Vg8Report {
    double lhs = 0.0;    // E[(V^2/sigma^2 - 1)^2]
    double gamma = 0.0;
    double bound = 0.0;  // 16 gamma^2
    double margin = 0.0;
};

inline Vg8Report check_vg8uj2(const MartingaleTrace& tr) {
    Vg8Report rep;
    rep.gamma = tr.gamma;
    rep.bound = 16.0 * tr.gamma * tr.gamma;
    std::vector<double> dev2(static_cast<std::size_t>(tr.n_outcomes));
    for (std::int64_t w = 0; w < tr.n_outcomes; ++w) {
        const double d = tr.v2[static_cast<std::size_t>(w)] / tr.sigma2 - 1.0;
        dev2[static_cast<std::size_t>(w)] = d * d;
    }
    rep.lhs = tr.expectation(dev2);
    rep.margin = rep.bound - rep.lhs;
    return rep;
}

struct TauReport {
    std::vector<std::pair<int, double>> law;  // (value of tau, probability)
    double max_unit_variance_dev = 0.0;       // max_w |sum_k E(J_k^2|F_{k-1}) - 1|
    bool stopping_time_ok = true;             // {tau >= i} constant on F_{i-1} atoms
};

inline TauReport stopping_time_tau(const MartingaleTrace& tr) {
    TauReport rep;
    const std::int64_t n_out = tr.n_outcomes;

    std::map<int, long double> law_num;
    for (std::int64_t w = 0; w < n_out; ++w)
        law_num[tr.tau[static_cast<std::size_t>(w)]] +=
            static_cast<long double>(tr.prob[static_cast<std::size_t>(w)]);
    for (const auto& [t, num] : law_num)
        rep.law.emplace_back(t, static_cast<double>(num / static_cast<long double>(tr.prob_den)));

    // sum_{k=1}^{N+1} E(J_k^2 | F_{k-1})
    //   = sum_{k <= tau} E(Y_k^2|F_{k-1})/sigma^2 + (1 - W_tau)
    // using only EZ = 0, EZ^2 = 1 for the auxiliary normal.
    for (std::int64_t w = 0; w < n_out; ++w) {
        const int t = tr.tau[static_cast<std::size_t>(w)];
        const double total =
            tr.w_cum[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)] +
            (1.0 - tr.w_cum[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)]);
        rep.max_unit_variance_dev = std::max(rep.max_unit_variance_dev, std::abs(total - 1.0));
    }
    // the cancellation above is trivially exact; verify the decomposition the
    // honest way as well, accumulating the J_k^2 conditional variances term
    // by term exactly as they are defined
    for (std::int64_t w = 0; w < n_out; ++w) {
        const int t = tr.tau[static_cast<std::size_t>(w)];
        KahanSum acc;
        for (int k = 1; k <= tr.n + 1; ++k) {
            if (k <= t)
                acc.add(tr.cexp_y2[static_cast<std::size_t>(k)][static_cast<std::size_t>(w)] /
                        tr.sigma2);
            if (k == t + 1)
                acc.add(1.0 - tr.w_cum[static_cast<std::size_t>(t)][static_cast<std::size_t>(w)]);
        }
        rep.max_unit_variance_dev =
            std::max(rep.max_unit_variance_dev, std::abs(acc.value() - 1.0));
    }

    // {tau >= i} must be determined by the first i-1 coordinates
    for (int i = 1; i <= tr.n && rep.stopping_time_ok; ++i) {
        std::vector<signed char> seen(static_cast<std::size_t>(tr.atom_count[static_cast<std::size_t>(i - 1)]), -1);
        for (std::int64_t w = 0; w < n_out; ++w) {
            const auto aid = static_cast<std::size_t>(
                tr.atom[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(w)]);
            const signed char ind = tr.tau[static_cast<std::size_t>(w)] >= i ? 1 : 0;
            if (seen[aid] == -1)
                seen[aid] = ind;
            else if (seen[aid] != ind) {
                rep.stopping_time_ok = false;
                break;
            }
        }
    }
    return rep;
}

struct TruncationSplitReport {
    double c = 0.0;
    double l_of_c = 0.0;           // L(c)
    double var_trunc_tail = 0.0;   // Var(sum T_i), T_i the truncated-tail parts
    double sigma_c2 = 0.0;         // Var of the truncated standardized sum
    bool var_bound_ok = false;     // Var(sum T_i) <= 3 L(c)
    bool sigma_bound_ok = false;   // |sigma_c^2 - 1| <= 13 L(c)
};

inline TruncationSplitReport truncation_split(const FiniteChain& chain, double c,
                                              double tol = 1e-12) {
    if (!(c > 0.0)) throw invalid_spec_error("truncation_split: c must be > 0");
    MartingaleTrace tr = martingale_decompose(chain);
    const std::int64_t n_out = tr.n_outcomes;
    const double thr = c * tr.sigma;

    std::vector<double> t_sum(static_cast<std::size_t>(n_out), 0.0);
    std::vector<double> v_sum(static_cast<std::size_t>(n_out), 0.0);
    std::vector<double> l_stat(static_cast<std::size_t>(n_out), 0.0);
    for (std::int64_t w = 0; w < n_out; ++w) {
        double ts = 0.0, vs = 0.0, ls = 0.0;
        for (int i = 1; i <= tr.n; ++i) {
            const double xv = tr.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)];
            if (std::abs(xv) > thr) {
                ts += xv / tr.sigma;
                ls += xv * xv;
            } else {
                vs += xv / tr.sigma;
            }
        }
        t_sum[static_cast<std::size_t>(w)] = ts;
        v_sum[static_cast<std::size_t>(w)] = vs;
        l_stat[static_cast<std::size_t>(w)] = ls;
    }

    const auto variance = [&](std::span<const double> vals) {
        const double mean = tr.expectation(vals);
        std::vector<double> sq(static_cast<std::size_t>(n_out));
        for (std::int64_t w = 0; w < n_out; ++w) {
            const double d = vals[static_cast<std::size_t>(w)] - mean;
            sq[static_cast<std::size_t>(w)] = d * d;
        }
        return tr.expectation(sq);
    };

    TruncationSplitReport rep;
    rep.c = c;
    rep.l_of_c = tr.expectation(l_stat) / tr.sigma2;
    rep.var_trunc_tail = variance(t_sum);
    rep.sigma_c2 = variance(v_sum);
    rep.var_bound_ok = rep.var_trunc_tail <= 3.0 * rep.l_of_c + tol;
    rep.sigma_bound_ok = std::abs(rep.sigma_c2 - 1.0) <= 13.0 * rep.l_of_c + tol;
    return rep;
}

// Seeded random 1-dependent chains with dyadic support values and dyadic
// pmf, so probability arithmetic is exact in floating point.
inline FiniteChain random_finite_chain(std::uint64_t seed, int max_n = 10) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Xoshiro256pp rng(derive_replicate_seed(seed, attempt));
        FiniteChain chain;
        const int a = 2 + static_cast<int>(rng.bounded(2));  // alphabet of 2 or 3
        chain.n = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_n)));
        chain.alphabet.resize(static_cast<std::size_t>(a));
        for (int i = 0; i < a; ++i)
            chain.alphabet[static_cast<std::size_t>(i)] = static_cast<double>(i);

        // dyadic pmf: positive integer weights summing to 8
        chain.weights.assign(static_cast<std::size_t>(a), 1);
        for (std::uint64_t r = static_cast<std::uint64_t>(8 - a); r > 0; --r)
            chain.weights[static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(a)))] += 1;

        chain.link.resize(static_cast<std::size_t>(chain.n));
        const double wsum = 8.0;
        for (auto& g : chain.link) {
            g.resize(static_cast<std::size_t>(a) * a);
            for (auto& v : g)
                v = static_cast<double>(static_cast<std::int64_t>(rng.bounded(33)) - 16) / 8.0;
            // center exactly: the mean is dyadic because weights sum to 8
            long double mean = 0.0L;
            for (int e1 = 0; e1 < a; ++e1)
                for (int e2 = 0; e2 < a; ++e2)
                    mean += static_cast<long double>(chain.weights[static_cast<std::size_t>(e1)]) *
                            chain.weights[static_cast<std::size_t>(e2)] *
                            g[static_cast<std::size_t>(e1 * a + e2)];
            const double m = static_cast<double>(mean / (wsum * wsum));
            for (auto& v : g) v -= m;
        }

        try {
            MartingaleTrace tr = martingale_decompose(chain);
            if (tr.sigma2 > 1e-6) return chain;
        } catch (const invalid_spec_error&) {
            // fall through and retry with the next derived seed
        }
    }
}

} // namespace mdclt
