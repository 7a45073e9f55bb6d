#pragma once

// Shared test utilities: independent numeric oracles (quadrature, brute-force
// enumeration) and seeded random generators for specs, laws and chains. The
// oracles deliberately avoid the library's own closed-form paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mdclt/mdclt.hpp"

namespace testutil {

// Composite Simpson on [a,b]; panels must be even.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Riemann-sum oracle for \int |F - Phi| where F is the CDF of an atomic law.
// Midpoint rule on a wide interval; independent of the segment-exact path.
inline double riemann_l1_cdf_distance(const mdclt::AtomicLaw& law, double lo = -12.0,
                                      double hi = 12.0, int steps = 2000000) {
    const double h = (hi - lo) / steps;
    double acc = 0.0;
    std::size_t idx = 0;
    double cum = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double t = lo + (i + 0.5) * h;
        while (idx < law.atoms.size() && law.atoms[idx].value <= t) cum += law.atoms[idx++].prob;
        acc += std::abs(cum - mdclt::normal_cdf(t)) * h;
    }
    return acc;
}

// Random atomic law with second moment scaled to exactly 1.
inline mdclt::AtomicLaw random_atomic_law(std::uint64_t seed) {
    mdclt::Xoshiro256pp rng(seed);
    const int n_atoms = 1 + static_cast<int>(rng.bounded(8));
    for (;;) {
        std::vector<double> values;
        for (int i = 0; i < n_atoms; ++i)
            values.push_back(static_cast<double>(static_cast<std::int64_t>(rng.bounded(49)) - 24) / 8.0);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        std::vector<double> w;
        double wsum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            w.push_back(1.0 + static_cast<double>(rng.bounded(16)));
            wsum += w.back();
        }
        double m2 = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            m2 += (w[i] / wsum) * values[i] * values[i];
        if (m2 <= 0.0) continue;
        const double scale = 1.0 / std::sqrt(m2);
        std::vector<mdclt::Atom> atoms;
        for (std::size_t i = 0; i < values.size(); ++i)
            atoms.push_back({values[i] * scale, w[i] / wsum});
        return mdclt::AtomicLaw(std::move(atoms));
    }
}

// Random finite-support moving-window spec with dyadic weights, so that the
// coordinate and block laws are exactly enumerable.
inline mdclt::ArraySpec random_finite_spec(std::uint64_t seed, std::int64_t max_n = 40,
                                           int max_window = 2) {
    mdclt::Xoshiro256pp rng(seed);
    for (;;) {
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.bounded(static_cast<std::uint64_t>(max_n - 1)));
        const int window = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_window + 1)));
        std::vector<double> weights;
        bool nonzero = false;
        for (int j = 0; j <= window; ++j) {
            weights.push_back(static_cast<double>(static_cast<std::int64_t>(rng.bounded(9)) - 4) / 4.0);
            nonzero = nonzero || weights.back() != 0.0;
        }
        if (!nonzero) continue;
        mdclt::MarginalModel innovation =
            rng.bounded(2) == 0
                ? mdclt::MarginalModel::rademacher()
                : mdclt::MarginalModel::finite({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}});
        try {
            return mdclt::moving_window_spec(n, window, std::move(innovation), std::move(weights));
        } catch (const mdclt::invalid_spec_error&) {
            seed = mdclt::mix64(seed);
            rng = mdclt::Xoshiro256pp(seed);
        }
    }
}

// Independent chain: X_i depends only on eps_i.
inline mdclt::FiniteChain independent_rademacher_chain(int n, double scale = 1.0) {
    mdclt::FiniteChain c;
    c.alphabet = {-1.0, 1.0};
    c.weights = {1, 1};
    c.n = n;
    c.link.resize(static_cast<std::size_t>(n));
    for (auto& g : c.link) {
        g = {-scale, -scale, scale, scale};  // value = alphabet[e1] * scale
    }
    return c;
}

// X_1 = e1*e2, X_2 = e2*e3, ... with Rademacher innovations.
inline mdclt::FiniteChain product_chain(int n) {
    mdclt::FiniteChain c;
    c.alphabet = {-1.0, 1.0};
    c.weights = {1, 1};
    c.n = n;
    c.link.resize(static_cast<std::size_t>(n));
    for (auto& g : c.link) {
        g.resize(4);
        for (int e1 = 0; e1 < 2; ++e1)
            for (int e2 = 0; e2 < 2; ++e2)
                g[static_cast<std::size_t>(e1 * 2 + e2)] = c.alphabet[static_cast<std::size_t>(e1)] *
                                                           c.alphabet[static_cast<std::size_t>(e2)];
    }
    return c;
}

} // namespace testutil
