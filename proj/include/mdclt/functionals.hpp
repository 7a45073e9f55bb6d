#pragma once

// Truncation functionals over a spec:
//
//   U(c) = (m / sigma^2) * sum_i E[X_i^2 1{|X_i| > c*sigma/m}]
//   L(c) = (1 / sigma^2) * sum_b E[Y_b^2 1{|Y_b| > c*sigma}]   (Y_b block sums)
//
// computed analytically when the family has closed-form truncated second
// moments, by Monte Carlo otherwise. Monte Carlo evaluations over a c-grid
// share one sample path so that monotonicity in c holds replicate-wise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "mdclt/array_spec.hpp"
#include "mdclt/common.hpp"
#include "mdclt/sampling.hpp"

namespace mdclt {

enum class FunctionalMethod { analytic, monte_carlo };

struct TruncationReport {
    double c = 0.0;
    std::optional<double> u_of_c;
    std::optional<double> l_of_c;
    double sigma2 = 0.0;
    std::optional<double> sigma_c2;
    FunctionalMethod method = FunctionalMethod::analytic;
    std::optional<double> std_err;
    bool tail_unobserved = false;  // Monte Carlo saw no indicator activation
};

struct GridFunctional {
    std::vector<double> c;
    std::vector<double> value;
    std::vector<double> std_err;        // zeros for analytic
    std::vector<char> tail_unobserved;  // per grid point
    FunctionalMethod method = FunctionalMethod::analytic;
    double sigma2 = 0.0;
};

struct SigmaInfo {
    double sigma2 = 0.0;
    bool exact = true;
    double std_err = 0.0;
};

// Exact sigma^2 when the array spec carries one, Monte Carlo (k >= 1e5) otherwise.
inline SigmaInfo sigma2_for(const ArraySpec& spec, std::int64_t k, std::uint64_t seed_root) {
    if (spec.sigma2) return {*spec.sigma2, true, 0.0};
    const std::int64_t k_est = std::max<std::int64_t>(k, 100000);
    const MeanSe est = estimate_sigma2(spec, k_est, mix64(seed_root ^ 0x5157ull));
    return {est.mean, false, est.se};
}

namespace detail {

// Per-row tail statistics sum_i v_i^2 1{|v_i| > u_j} for an ascending list of
// thresholds, via one sort + suffix sums per row.
class TailStatWorkspace {
public:
    void compute(std::span<const double> values, std::span<const double> thresholds_ascending,
                 std::span<double> out_stats) {
        abs_.assign(values.begin(), values.end());
        for (auto& v : abs_) v = std::abs(v);
        std::sort(abs_.begin(), abs_.end());
        suffix_.resize(abs_.size() + 1);
        suffix_[abs_.size()] = 0.0;
        for (std::size_t i = abs_.size(); i-- > 0;)
            suffix_[i] = suffix_[i + 1] + abs_[i] * abs_[i];
        std::size_t pos = 0;
        for (std::size_t j = 0; j < thresholds_ascending.size(); ++j) {
            const double u = thresholds_ascending[j];
            while (pos < abs_.size() && !(abs_[pos] > u)) ++pos;  // strict >
            out_stats[j] = suffix_[pos];
        }
    }

private:
    std::vector<double> abs_;
    std::vector<double> suffix_;
};

struct GridAccumulator {
    std::vector<MomentAccumulator> acc;
    void ensure(std::size_t n) {
        if (acc.size() != n) acc.resize(n);
    }
    void merge(const GridAccumulator& o) {
        if (acc.empty()) {
            acc = o.acc;
            return;
        }
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j].merge(o.acc[j]);
    }
};

enum class TailSource { coordinates, blocks };

// Shared engine for U and L over a grid of c values.
inline GridFunctional tail_functional_grid(const ArraySpec& spec, std::span<const double> cs,
                                           TailSource source, FunctionalMethod method,
                                           std::int64_t k, std::uint64_t seed_root,
                                           const SigmaInfo& sig) {
    const double sigma = std::sqrt(sig.sigma2);
    const int m = spec.dep_range;
    const double scale =
        source == TailSource::coordinates ? static_cast<double>(m) / sig.sigma2 : 1.0 / sig.sigma2;

    GridFunctional out;
    out.c.assign(cs.begin(), cs.end());
    out.sigma2 = sig.sigma2;
    out.value.resize(cs.size());
    out.std_err.assign(cs.size(), 0.0);
    out.tail_unobserved.assign(cs.size(), 0);

    std::vector<double> thresholds(cs.size());
    for (std::size_t j = 0; j < cs.size(); ++j) {
        if (!(cs[j] > 0.0)) throw invalid_spec_error("truncation level c must be > 0");
        thresholds[j] = source == TailSource::coordinates ? cs[j] * sigma / m : cs[j] * sigma;
    }

    const AnalyticTails tails = analytic_tails(spec);
    const auto& tail_sum = source == TailSource::coordinates ? tails.coord_sum : tails.block_sum;
    const auto& max_abs = source == TailSource::coordinates ? tails.coord_max_abs : tails.block_max_abs;

    if (method == FunctionalMethod::analytic) {
        out.method = FunctionalMethod::analytic;
        for (std::size_t j = 0; j < cs.size(); ++j) {
            if (max_abs && thresholds[j] >= *max_abs) {
                out.value[j] = 0.0;  // indicator can never fire
            } else if (tail_sum) {
                out.value[j] = scale * tail_sum(thresholds[j]);
            } else {
                throw needs_estimation_error("spec '" + spec.label +
                                             "' has no closed-form truncated second moments");
            }
        }
        return out;
    }

    out.method = FunctionalMethod::monte_carlo;
    // ascending threshold order for the two-pointer walk
    std::vector<std::size_t> order(cs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return thresholds[a] < thresholds[b]; });
    std::vector<double> thr_sorted(cs.size());
    for (std::size_t j = 0; j < cs.size(); ++j) thr_sorted[j] = thresholds[order[j]];

    const bool blocks = source == TailSource::blocks;
    const std::int64_t n_blocks = (spec.n_vars + m - 1) / m;

    struct State {
        GridAccumulator grid;
        TailStatWorkspace ws;
        std::vector<double> blocked;
        std::vector<double> stats;
        void merge(const State& o) { grid.merge(o.grid); }
    };
    State total = reduce_rows<State>(
        spec, k, seed_root, [&](State& st, std::int64_t, std::span<const double> row) {
            st.grid.ensure(cs.size());
            st.stats.resize(cs.size());
            if (blocks) {
                st.blocked.resize(static_cast<std::size_t>(n_blocks));
                block_sums_row(row, m, st.blocked);
                st.ws.compute(st.blocked, thr_sorted, st.stats);
            } else {
                st.ws.compute(row, thr_sorted, st.stats);
            }
            for (std::size_t j = 0; j < cs.size(); ++j) st.grid.acc[j].add(st.stats[j]);
        });

    // accumulators are indexed in sorted-threshold order
    for (std::size_t jj = 0; jj < cs.size(); ++jj) {
        const std::size_t j = order[jj];
        const MeanSe ms = total.grid.acc[jj].result();
        out.value[j] = scale * ms.mean;
        out.std_err[j] = scale * ms.se;
        const bool provably_zero = max_abs && thresholds[j] >= *max_abs;
        out.tail_unobserved[j] = (ms.mean == 0.0 && !provably_zero) ? 1 : 0;
    }
    return out;
}

} // namespace detail

inline GridFunctional compute_U_grid(const ArraySpec& spec, std::span<const double> cs,
                                     FunctionalMethod method, std::int64_t k,
                                     std::uint64_t seed_root) {
    const SigmaInfo sig = sigma2_for(spec, k, seed_root);
    return detail::tail_functional_grid(spec, cs, detail::TailSource::coordinates, method, k,
                                        seed_root, sig);
}

inline GridFunctional compute_L_grid(const ArraySpec& spec, std::span<const double> cs,
                                     FunctionalMethod method, std::int64_t k,
                                     std::uint64_t seed_root) {
    const SigmaInfo sig = sigma2_for(spec, k, seed_root);
    return detail::tail_functional_grid(spec, cs, detail::TailSource::blocks, method, k, seed_root,
                                        sig);
}

// True when U(c) can be evaluated in closed form at every c in cs.
inline bool analytic_U_available(const ArraySpec& spec, std::span<const double> cs) {
    const AnalyticTails tails = analytic_tails(spec);
    if (tails.coord_sum) return true;
    if (!tails.coord_max_abs || !spec.sigma2) return false;
    const double sigma = std::sqrt(*spec.sigma2);
    for (double c : cs)
        if (c * sigma / spec.dep_range < *tails.coord_max_abs) return false;
    return true;
}

inline bool analytic_L_available(const ArraySpec& spec, std::span<const double> cs) {
    const AnalyticTails tails = analytic_tails(spec);
    if (tails.block_sum) return true;
    if (!tails.block_max_abs || !spec.sigma2) return false;
    const double sigma = std::sqrt(*spec.sigma2);
    for (double c : cs)
        if (c * sigma < *tails.block_max_abs) return false;
    return true;
}

inline TruncationReport compute_U(const ArraySpec& spec, double c, FunctionalMethod method,
                                  std::int64_t k = 100000, std::uint64_t seed_root = 1) {
    const double cs[1] = {c};
    GridFunctional g = compute_U_grid(spec, cs, method, k, seed_root);
    TruncationReport rep;
    rep.c = c;
    rep.u_of_c = g.value[0];
    rep.sigma2 = g.sigma2;
    rep.method = g.method;
    if (g.method == FunctionalMethod::monte_carlo) rep.std_err = g.std_err[0];
    rep.tail_unobserved = g.tail_unobserved[0] != 0;
    return rep;
}

inline TruncationReport compute_L(const ArraySpec& spec, double c, std::int64_t k = 100000,
                                  std::uint64_t seed_root = 1) {
    const double cs[1] = {c};
    const FunctionalMethod method = analytic_L_available(spec, cs)
                                        ? FunctionalMethod::analytic
                                        : FunctionalMethod::monte_carlo;
    GridFunctional g = compute_L_grid(spec, cs, method, k, seed_root);
    TruncationReport rep;
    rep.c = c;
    rep.l_of_c = g.value[0];
    rep.sigma2 = g.sigma2;
    rep.method = g.method;
    if (g.method == FunctionalMethod::monte_carlo) rep.std_err = g.std_err[0];
    rep.tail_unobserved = g.tail_unobserved[0] != 0;
    return rep;
}

namespace detail {

struct RawMoments4 {
    KahanSum m1, m2, m3, m4;
    std::int64_t count = 0;
    void add(double v) {
        const double v2 = v * v;
        m1.add(v);
        m2.add(v2);
        m3.add(v2 * v);
        m4.add(v2 * v2);
        ++count;
    }
    void merge(const RawMoments4& o) {
        m1.merge(o.m1);
        m2.merge(o.m2);
        m3.merge(o.m3);
        m4.merge(o.m4);
        count += o.count;
    }
};

} // namespace detail

// sigma_c^2 = Var( sum_i (X_i/sigma) 1{|X_i| <= c*sigma} ), Monte Carlo.
inline TruncationReport truncated_variance(const ArraySpec& spec, double c, std::int64_t k,
                                           std::uint64_t seed_root = 1) {
    if (!(c > 0.0)) throw invalid_spec_error("truncated_variance: c must be > 0");
    const SigmaInfo sig = sigma2_for(spec, k, seed_root);
    const double sigma = std::sqrt(sig.sigma2);
    const double threshold = c * sigma;

    struct State {
        detail::RawMoments4 mom;
        void merge(const State& o) { mom.merge(o.mom); }
    };
    State st = reduce_rows<State>(spec, k, seed_root,
                                  [&](State& s, std::int64_t, std::span<const double> row) {
                                      KahanSum v;
                                      for (double x : row)
                                          if (std::abs(x) <= threshold) v.add(x / sigma);
                                      s.mom.add(v.value());
                                  });

    const double kk = static_cast<double>(st.mom.count);
    const double mu = st.mom.m1.value() / kk;
    const double ex2 = st.mom.m2.value() / kk;
    const double ex3 = st.mom.m3.value() / kk;
    const double ex4 = st.mom.m4.value() / kk;
    const double var = std::max(0.0, (ex2 - mu * mu) * kk / (kk - 1.0));
    // centered fourth moment for the SE of the variance estimate
    const double c2 = ex2 - mu * mu;
    const double c4 = ex4 - 4.0 * mu * ex3 + 6.0 * mu * mu * ex2 - 3.0 * mu * mu * mu * mu;
    const double var_of_var = std::max(0.0, (c4 - c2 * c2) / kk);

    TruncationReport rep;
    rep.c = c;
    rep.sigma2 = sig.sigma2;
    rep.sigma_c2 = var;
    rep.method = FunctionalMethod::monte_carlo;
    rep.std_err = std::sqrt(var_of_var);
    return rep;
}

struct LluCheck {
    double c = 0.0;
    double u_of_c = 0.0;
    double l_of_2c = 0.0;
    double margin = 0.0;   // 4 U(c) - L(2c)
    double std_err = 0.0;  // 0 when both sides analytic
    bool ok = false;       // margin >= -5 * std_err
};

// L(2c) <= 4 U(c).
inline LluCheck check_Llu(const ArraySpec& spec, double c, std::int64_t k,
                          std::uint64_t seed_root = 1) {
    const double cu[1] = {c};
    const double cl[1] = {2.0 * c};
    const FunctionalMethod mu = analytic_U_available(spec, cu) ? FunctionalMethod::analytic
                                                               : FunctionalMethod::monte_carlo;
    const FunctionalMethod ml = analytic_L_available(spec, cl) ? FunctionalMethod::analytic
                                                               : FunctionalMethod::monte_carlo;
    GridFunctional u = compute_U_grid(spec, cu, mu, k, seed_root);
    GridFunctional l = compute_L_grid(spec, cl, ml, k, seed_root);
    LluCheck out;
    out.c = c;
    out.u_of_c = u.value[0];
    out.l_of_2c = l.value[0];
    out.margin = 4.0 * u.value[0] - l.value[0];
    out.std_err = std::sqrt(16.0 * u.std_err[0] * u.std_err[0] + l.std_err[0] * l.std_err[0]);
    out.ok = out.margin >= -5.0 * out.std_err - 1e-12;
    return out;
}

} // namespace mdclt
