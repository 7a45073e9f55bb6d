#pragma once

// Marginal laws used as innovations / coordinate distributions. Each model
// carries whatever analytic knowledge is available: exact second moment, a
// closed-form truncated second moment u -> E[X^2 1{|X|>u}], and an essential
// sup. The tail function is what makes truncation functionals analytic.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mdclt/errors.hpp"
#include "mdclt/gaussian.hpp"
#include "mdclt/rng.hpp"

namespace mdclt {

enum class MarginalKind { finite_support, heavy_tail_density, scaled_uniform_union, sample_only };

struct Atom {
    double value;
    double prob;
};

class MarginalModel {
public:
    using Sampler = std::function<double(Xoshiro256pp&)>;
    using TailFn = std::function<double(double)>;

    static MarginalModel finite(std::vector<Atom> atoms) {
        double total = 0.0, m2 = 0.0, mx = 0.0;
        for (const auto& a : atoms) {
            if (!(a.prob > 0.0)) throw invalid_spec_error("finite marginal: probabilities must be > 0");
            total += a.prob;
            m2 += a.prob * a.value * a.value;
            mx = std::max(mx, std::abs(a.value));
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw invalid_spec_error("finite marginal: probabilities must sum to 1");
        MarginalModel m;
        m.kind_ = MarginalKind::finite_support;
        m.atoms_ = std::move(atoms);
        std::sort(m.atoms_.begin(), m.atoms_.end(),
                  [](const Atom& a, const Atom& b) { return a.value < b.value; });
        m.second_moment_ = m2;
        m.max_abs_ = mx;
        return m;
    }

    static MarginalModel rademacher() {
        return finite({{-1.0, 0.5}, {1.0, 0.5}});
    }

    // Density (3/2) x^{-4} on |x| >= 1: E X^2 = 3, E[X^2 1{|X|>u}] = 3/max(u,1).
    static MarginalModel heavy_tail() {
        MarginalModel m;
        m.kind_ = MarginalKind::heavy_tail_density;
        m.second_moment_ = 3.0;
        return m;
    }

    // Uniform on (-1, -1+a) u (1-a, 1).
    static MarginalModel uniform_union(double a) {
        if (!(a > 0.0 && a < 1.0))
            throw invalid_spec_error("uniform_union: a must lie in (0,1)");
        MarginalModel m;
        m.kind_ = MarginalKind::scaled_uniform_union;
        m.union_a_ = a;
        m.second_moment_ = (1.0 - std::pow(1.0 - a, 3)) / (3.0 * a);
        m.max_abs_ = 1.0;
        return m;
    }

    static MarginalModel standard_normal() {
        MarginalModel m;
        m.kind_ = MarginalKind::sample_only;
        m.sampler_ = [](Xoshiro256pp& rng) { return normal_quantile(rng.uniform()); };
        m.second_moment_ = 1.0;
        m.tail_fn_ = [](double u) { return normal_tail_second_moment(u); };
        return m;
    }

    static MarginalModel sample_only(Sampler sampler, std::optional<double> second_moment = {},
                                     TailFn tail_fn = {}, std::optional<double> max_abs = {}) {
        MarginalModel m;
        m.kind_ = MarginalKind::sample_only;
        m.sampler_ = std::move(sampler);
        m.second_moment_ = second_moment;
        m.tail_fn_ = std::move(tail_fn);
        m.max_abs_ = max_abs;
        return m;
    }

    MarginalKind kind() const { return kind_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    double union_a() const { return union_a_; }
    std::optional<double> second_moment() const { return second_moment_; }
    std::optional<double> max_abs() const { return max_abs_; }

    double mean() const {
        if (kind_ == MarginalKind::finite_support) {
            KahanSum s;
            for (const auto& a : atoms_) s.add(a.prob * a.value);
            return s.value();
        }
        return 0.0;  // remaining built-in kinds are symmetric about 0
    }

    bool has_tail_fn() const {
        return kind_ != MarginalKind::sample_only || static_cast<bool>(tail_fn_);
    }

    // E[X^2 1{|X| > u}], strict inequality at the threshold.
    double tail_second_moment(double u) const {
        switch (kind_) {
            case MarginalKind::finite_support: {
                KahanSum s;
                for (const auto& a : atoms_)
                    if (std::abs(a.value) > u) s.add(a.prob * a.value * a.value);
                return s.value();
            }
            case MarginalKind::heavy_tail_density:
                return 3.0 / std::max(u, 1.0);
            case MarginalKind::scaled_uniform_union: {
                if (u >= 1.0) return 0.0;
                const double lo = std::max(u, 1.0 - union_a_);
                // two symmetric pieces, density 1/(2a) each
                return (1.0 - lo * lo * lo) / (3.0 * union_a_);
            }
            case MarginalKind::sample_only:
                if (!tail_fn_) throw needs_estimation_error("marginal has no closed-form tail");
                return tail_fn_(u);
        }
        return 0.0;
    }

    // Thresholds where u -> tail_second_moment(u) changes analytic form.
    std::vector<double> tail_breakpoints() const {
        std::vector<double> bs;
        switch (kind_) {
            case MarginalKind::finite_support:
                for (const auto& a : atoms_)
                    if (a.value != 0.0) bs.push_back(std::abs(a.value));
                break;
            case MarginalKind::heavy_tail_density:
                bs.push_back(1.0);
                break;
            case MarginalKind::scaled_uniform_union:
                bs.push_back(1.0 - union_a_);
                bs.push_back(1.0);
                break;
            case MarginalKind::sample_only:
                break;
        }
        std::sort(bs.begin(), bs.end());
        bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
        return bs;
    }

    bool has_sampler() const {
        return kind_ != MarginalKind::sample_only || static_cast<bool>(sampler_);
    }

    double sample(Xoshiro256pp& rng) const {
        switch (kind_) {
            case MarginalKind::finite_support: {
                double u = rng.uniform();
                for (const auto& a : atoms_) {
                    if (u < a.prob) return a.value;
                    u -= a.prob;
                }
                return atoms_.back().value;
            }
            case MarginalKind::heavy_tail_density: {
                // P(|X| > x) = x^{-3} for x >= 1, so |X| = U^{-1/3}.
                const double mag = 1.0 / std::cbrt(rng.uniform());
                return rng.sign() * mag;
            }
            case MarginalKind::scaled_uniform_union:
                return rng.sign() * (1.0 - union_a_ * rng.uniform());
            case MarginalKind::sample_only:
                if (!sampler_) throw unsupported_family_error("sample-only marginal without sampler");
                return sampler_(rng);
        }
        return 0.0;
    }

private:
    MarginalKind kind_ = MarginalKind::sample_only;
    std::vector<Atom> atoms_;
    double union_a_ = 0.0;
    Sampler sampler_;
    std::optional<double> second_moment_;
    TailFn tail_fn_;
    std::optional<double> max_abs_;
};

} // namespace mdclt
