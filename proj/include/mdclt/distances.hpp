#pragma once

// Distances between a (sample or atomic) law and the standard normal.
//
// d_W is the L1 distance between CDFs, computed exactly segment by segment
// between sorted support points using the Gaussian partial integral
// G(t) = t Phi(t) + phi(t); d_K is the one-sample sup statistic; d_TV is a
// histogram estimate, refused for lattice-like samples. Confidence intervals
// come from a seeded percentile bootstrap over resample counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdclt/array_spec.hpp"
#include "mdclt/common.hpp"
#include "mdclt/errors.hpp"
#include "mdclt/gaussian.hpp"
#include "mdclt/parallel.hpp"
#include "mdclt/rng.hpp"

namespace mdclt {

enum class Metric { W, K, TV };

inline const char* metric_name(Metric m) {
    switch (m) {
        case Metric::W: return "W";
        case Metric::K: return "K";
        case Metric::TV: return "TV";
    }
    return "?";
}

struct DistanceEstimate {
    Metric metric = Metric::W;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::int64_t k = 0;
    std::string estimator;
    double std_err = 0.0;
    std::optional<double> bracket_bias;  // TV: |estimate(2*bins) - estimate(bins)|
};

struct AtomicLaw {
    std::vector<Atom> atoms;  // strictly increasing values, probs > 0 summing to 1

    explicit AtomicLaw(std::vector<Atom> a) : atoms(std::move(a)) {
        if (atoms.empty()) throw invalid_spec_error("AtomicLaw: no atoms");
        double total = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (!(atoms[i].prob > 0.0)) throw invalid_spec_error("AtomicLaw: probs must be > 0");
            if (i > 0 && !(atoms[i].value > atoms[i - 1].value))
                throw invalid_spec_error("AtomicLaw: values must be strictly increasing");
            total += atoms[i].prob;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw invalid_spec_error("AtomicLaw: probs must sum to 1");
    }
};

namespace detail {

// Support grid with precomputed Gaussian values; cumulative probabilities
// vary per bootstrap resample, the grid does not.
struct SupportGrid {
    std::vector<double> x;        // ascending unique support points
    std::vector<double> phi_cdf;  // Phi(x_i)
    std::vector<double> g;        // G(x_i)

    void build(const std::vector<double>& xs) {
        x = xs;
        phi_cdf.resize(x.size());
        g.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            phi_cdf[i] = normal_cdf(x[i]);
            g[i] = x[i] * phi_cdf[i] + normal_pdf(x[i]);
        }
    }

    // \int |F - Phi| with F the step CDF given by cumprob at the grid points.
    double l1_to_normal(std::span<const double> cumprob) const {
        const std::size_t u = x.size();
        KahanSum acc;
        acc.add(g.front());                    // (-inf, x_0): F = 0
        acc.add(g.back() - x.back());          // (x_last, inf): F = 1
        for (std::size_t i = 0; i + 1 < u; ++i) {
            const double p = cumprob[i];
            const double a = x[i], b = x[i + 1];
            const double ga = g[i], gb = g[i + 1];
            if (p <= phi_cdf[i]) {
                acc.add((gb - ga) - p * (b - a));
            } else if (p >= phi_cdf[i + 1]) {
                acc.add(p * (b - a) - (gb - ga));
            } else {
                const double z = normal_quantile(p);
                const double gz = z * p + normal_pdf(z);
                acc.add(std::abs(p * (z - a) - (gz - ga)));
                acc.add(std::abs((gb - gz) - p * (b - z)));
            }
        }
        return acc.value();
    }

    // sup |F - Phi| over both one-sided gaps at the grid points.
    double sup_to_normal(std::span<const double> cumprob) const {
        double d = 0.0;
        double prev = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            d = std::max(d, std::abs(cumprob[i] - phi_cdf[i]));
            d = std::max(d, std::abs(phi_cdf[i] - prev));
            prev = cumprob[i];
        }
        return d;
    }
};

inline void percentile_ci(std::vector<double> boot, double point, DistanceEstimate& est) {
    if (boot.empty()) {
        est.ci_low = est.ci_high = point;
        est.std_err = 0.0;
        return;
    }
    MomentAccumulator acc;
    for (double b : boot) acc.add(b);
    est.std_err = std::sqrt(acc.variance());
    std::sort(boot.begin(), boot.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(boot.size() - 1);
        return boot[static_cast<std::size_t>(std::llround(pos))];
    };
    est.ci_low = std::min(at(0.025), point);
    est.ci_high = std::max(at(0.975), point);
}

} // namespace detail

// Shared exact-ECDF estimator: sorts once, bootstraps W and K on the same
// resample counts.
class EmpiricalDistances {
public:
    explicit EmpiricalDistances(std::vector<double> samples) : k_(static_cast<std::int64_t>(samples.size())) {
        if (samples.empty()) throw invalid_spec_error("empirical distance: no samples");
        for (double s : samples)
            if (!std::isfinite(s)) throw invalid_spec_error("empirical distance: non-finite sample");
        std::sort(samples.begin(), samples.end());
        std::vector<double> xs;
        xs.reserve(samples.size());
        counts_.reserve(samples.size());
        cell_of_sample_.resize(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (xs.empty() || samples[i] != xs.back()) {
                xs.push_back(samples[i]);
                counts_.push_back(0);
            }
            counts_.back() += 1;
            cell_of_sample_[i] = static_cast<std::int32_t>(xs.size() - 1);
        }
        grid_.build(xs);
        cumprob_.resize(xs.size());
        std::int64_t run = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            run += counts_[i];
            cumprob_[i] = static_cast<double>(run) / static_cast<double>(k_);
        }
    }

    std::int64_t sample_count() const { return k_; }
    double duplicate_fraction() const {
        return 1.0 - static_cast<double>(counts_.size()) / static_cast<double>(k_);
    }

    double wasserstein_point() const { return grid_.l1_to_normal(cumprob_); }
    double kolmogorov_point() const { return grid_.sup_to_normal(cumprob_); }

    // Percentile bootstrap for both metrics on shared resample counts.
    std::pair<DistanceEstimate, DistanceEstimate> wasserstein_and_kolmogorov(
        std::uint64_t seed, int resamples = 200) const {
        std::vector<double> boot_w(static_cast<std::size_t>(resamples));
        std::vector<double> boot_k(static_cast<std::size_t>(resamples));
        parallel_chunks(resamples, 8, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
            std::vector<std::int64_t> counts(counts_.size());
            std::vector<double> cum(counts_.size());
            for (std::int64_t b = lo; b < hi; ++b) {
                Xoshiro256pp rng(derive_replicate_seed(seed, static_cast<std::uint64_t>(b)));
                std::fill(counts.begin(), counts.end(), 0);
                for (std::int64_t j = 0; j < k_; ++j)
                    counts[static_cast<std::size_t>(
                        cell_of_sample_[rng.bounded(static_cast<std::uint64_t>(k_))])]++;
                std::int64_t run = 0;
                for (std::size_t i = 0; i < counts.size(); ++i) {
                    run += counts[i];
                    cum[i] = static_cast<double>(run) / static_cast<double>(k_);
                }
                boot_w[static_cast<std::size_t>(b)] = grid_.l1_to_normal(cum);
                boot_k[static_cast<std::size_t>(b)] = grid_.sup_to_normal(cum);
            }
        });
        DistanceEstimate w;
        w.metric = Metric::W;
        w.point = wasserstein_point();
        w.k = k_;
        w.estimator = "exact-ecdf";
        detail::percentile_ci(boot_w, w.point, w);
        DistanceEstimate kk;
        kk.metric = Metric::K;
        kk.point = kolmogorov_point();
        kk.k = k_;
        kk.estimator = "ks";
        detail::percentile_ci(boot_k, kk.point, kk);
        return {w, kk};
    }

private:
    std::int64_t k_;
    std::vector<std::int64_t> counts_;
    std::vector<std::int32_t> cell_of_sample_;
    std::vector<double> cumprob_;
    detail::SupportGrid grid_;
};

inline DistanceEstimate empirical_wasserstein_to_normal(std::vector<double> samples,
                                                        std::uint64_t seed = 0x77ull,
                                                        int resamples = 200) {
    EmpiricalDistances est(std::move(samples));
    return est.wasserstein_and_kolmogorov(seed, resamples).first;
}

inline DistanceEstimate empirical_kolmogorov_to_normal(std::vector<double> samples,
                                                       std::uint64_t seed = 0x77ull,
                                                       int resamples = 200) {
    EmpiricalDistances est(std::move(samples));
    return est.wasserstein_and_kolmogorov(seed, resamples).second;
}

// Histogram TV estimate on [min-1, max+1] with the given bin count, plus the
// bias bracket from doubling the bin count. Lattice-like samples (>= 20%
// exact duplicates) are refused: their TV against any continuous law is 1.
inline DistanceEstimate empirical_tv_to_normal(const std::vector<double>& samples, int bins,
                                               std::uint64_t seed = 0x77ull, int resamples = 200) {
    if (samples.empty()) throw invalid_spec_error("empirical_tv: no samples");
    if (bins < 2) throw invalid_spec_error("empirical_tv: need at least 2 bins");
    const std::int64_t k = static_cast<std::int64_t>(samples.size());

    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    std::int64_t unique = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (i == 0 || sorted[i] != sorted[i - 1]) ++unique;
    if (static_cast<double>(k - unique) >= 0.2 * static_cast<double>(k))
        throw estimator_inapplicable_error("empirical_tv: samples look lattice-valued");

    const double lo = sorted.front() - 1.0;
    const double hi = sorted.back() + 1.0;

    const auto tv_from_counts = [&](std::span<const std::int64_t> counts, int nb) {
        const double width = (hi - lo) / nb;
        KahanSum acc;
        for (int b = 0; b < nb; ++b) {
            const double q = normal_cdf(lo + (b + 1) * width) - normal_cdf(lo + b * width);
            const double p = static_cast<double>(counts[static_cast<std::size_t>(b)]) /
                             static_cast<double>(k);
            acc.add(std::abs(p - q));
        }
        acc.add(normal_cdf(lo) + normal_sf(hi));  // Gaussian mass outside the range
        return 0.5 * acc.value();
    };

    const auto bin_of = [&](double v, int nb) {
        int b = static_cast<int>((v - lo) / (hi - lo) * nb);
        return std::clamp(b, 0, nb - 1);
    };

    std::vector<std::int64_t> base(static_cast<std::size_t>(bins), 0);
    std::vector<std::int64_t> base2(static_cast<std::size_t>(2 * bins), 0);
    std::vector<std::int32_t> cell(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const int b = bin_of(sorted[i], bins);
        base[static_cast<std::size_t>(b)]++;
        base2[static_cast<std::size_t>(bin_of(sorted[i], 2 * bins))]++;
        cell[i] = b;
    }

    DistanceEstimate est;
    est.metric = Metric::TV;
    est.point = tv_from_counts(base, bins);
    est.k = k;
    est.estimator = "histogram";
    est.bracket_bias = std::abs(tv_from_counts(base2, 2 * bins) - est.point);

    std::vector<double> boot(static_cast<std::size_t>(resamples));
    parallel_chunks(resamples, 8, [&](std::int64_t, std::int64_t lo_b, std::int64_t hi_b) {
        std::vector<std::int64_t> counts(static_cast<std::size_t>(bins));
        for (std::int64_t b = lo_b; b < hi_b; ++b) {
            Xoshiro256pp rng(derive_replicate_seed(seed, static_cast<std::uint64_t>(b)));
            std::fill(counts.begin(), counts.end(), 0);
            for (std::int64_t j = 0; j < k; ++j)
                counts[static_cast<std::size_t>(
                    cell[rng.bounded(static_cast<std::uint64_t>(k))])]++;
            boot[static_cast<std::size_t>(b)] = tv_from_counts(counts, bins);
        }
    });
    detail::percentile_ci(boot, est.point, est);
    return est;
}

// Exact law of S/sigma for finite-support moving-window specs by exhaustive
// enumeration over the innovation product space.
inline AtomicLaw exact_law(const ArraySpec& spec, std::int64_t max_outcomes = 10000000) {
    const auto* mw = std::get_if<MovingWindowFamily>(&spec.family);
    if (!mw || mw->innovation.kind() != MarginalKind::finite_support)
        throw invalid_spec_error("exact_law: spec is not finite-support");
    const auto& atoms = mw->innovation.atoms();
    const std::size_t alpha = atoms.size();
    const std::size_t span = static_cast<std::size_t>(spec.n_vars) + mw->weights.size() - 1;

    double outcomes = 1.0;
    for (std::size_t i = 0; i < span; ++i) {
        outcomes *= static_cast<double>(alpha);
        if (outcomes > static_cast<double>(max_outcomes))
            throw enumeration_limit_error("exact_law: state space too large");
    }

    // coefficient of eps_r in S
    std::vector<double> coef(span, 0.0);
    for (std::int64_t i = 1; i <= spec.n_vars; ++i)
        for (std::size_t j = 0; j < mw->weights.size(); ++j)
            coef[static_cast<std::size_t>(i - 1) + j] += mw->weights[j];

    const double sigma = std::sqrt(exact_sigma2(spec));
    std::vector<std::pair<double, double>> vals;
    vals.reserve(static_cast<std::size_t>(outcomes));
    std::vector<std::size_t> idx(span, 0);
    for (;;) {
        double v = 0.0, p = 1.0;
        for (std::size_t r = 0; r < span; ++r) {
            v += coef[r] * atoms[idx[r]].value;
            p *= atoms[idx[r]].prob;
        }
        vals.emplace_back(v / sigma, p);
        std::size_t pos = 0;
        while (pos < span && ++idx[pos] == alpha) idx[pos++] = 0;
        if (pos == span) break;
    }
    std::sort(vals.begin(), vals.end());
    std::vector<Atom> law;
    for (const auto& [v, p] : vals) {
        if (!law.empty() && law.back().value == v)
            law.back().prob += p;
        else
            law.push_back({v, p});
    }
    return AtomicLaw(std::move(law));
}

inline double exact_wasserstein_atomic_vs_normal(const AtomicLaw& law) {
    detail::SupportGrid grid;
    std::vector<double> xs;
    std::vector<double> cum;
    xs.reserve(law.atoms.size());
    cum.reserve(law.atoms.size());
    KahanSum run;
    for (const auto& a : law.atoms) {
        xs.push_back(a.value);
        run.add(a.prob);
        cum.push_back(std::min(run.value(), 1.0));
    }
    cum.back() = 1.0;
    grid.build(xs);
    return grid.l1_to_normal(cum);
}

// Exact values wrapped in the common estimate shape (zero-width interval).
inline DistanceEstimate exact_distance_estimate(const AtomicLaw& law, Metric metric);

inline double exact_kolmogorov_atomic_vs_normal(const AtomicLaw& law) {
    detail::SupportGrid grid;
    std::vector<double> xs;
    std::vector<double> cum;
    KahanSum run;
    for (const auto& a : law.atoms) {
        xs.push_back(a.value);
        run.add(a.prob);
        cum.push_back(std::min(run.value(), 1.0));
    }
    cum.back() = 1.0;
    grid.build(xs);
    return grid.sup_to_normal(cum);
}

inline DistanceEstimate exact_distance_estimate(const AtomicLaw& law, Metric metric) {
    if (metric == Metric::TV)
        throw estimator_inapplicable_error("exact TV of an atomic law against a continuous law is 1");
    DistanceEstimate est;
    est.metric = metric;
    est.point = metric == Metric::W ? exact_wasserstein_atomic_vs_normal(law)
                                    : exact_kolmogorov_atomic_vs_normal(law);
    est.ci_low = est.ci_high = est.point;
    est.k = 0;
    est.estimator = "enumeration";
    est.std_err = 0.0;
    return est;
}

} // namespace mdclt
