#pragma once

// The explicit bound formulas and their minimization over the free
// truncation level c. Every grid point is a valid bound by itself, so taking
// the min over a grid is safe; no interpolated value is ever reported.
//
//   d_W <= 30 { c^{1/3} + 12 U(c/2)^{1/2} }      (general m)
//   d_W <= 30 { c^{1/3} +  6 L(c)^{1/2} }        (via blocking)
//   d_K <= 2 sqrt(d_W)
//   d_TV <= sqrt(120) B^{1/2} + 30^{1/3} l^{2/3} B^{1/3},  B = c^{1/3} + 12 U(c/2)^{1/2}
//
// Wasserstein values are capped at sqrt(2), Kolmogorov/TV at 1; the uncapped
// value is kept in the term breakdown for rate tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdclt/array_spec.hpp"
#include "mdclt/common.hpp"
#include "mdclt/functionals.hpp"

namespace mdclt {

enum class BoundKind { wasserstein_m2, wasserstein_m1, kolmogorov, tv };

struct BoundReport {
    BoundKind kind = BoundKind::wasserstein_m2;
    double value = 0.0;   // capped
    double c_used = 0.0;
    std::vector<std::pair<std::string, double>> terms;
    std::optional<double> l_n;

    double term(const std::string& name) const {
        for (const auto& [k, v] : terms)
            if (k == name) return v;
        return 0.0;
    }
};

inline double wasserstein_bound_m2(double u_half_c, double c) {
    if (!(c > 0.0) || u_half_c < 0.0)
        throw std::domain_error("wasserstein_bound_m2: need c > 0 and U >= 0");
    return 30.0 * (std::cbrt(c) + 12.0 * std::sqrt(u_half_c));
}

inline double wasserstein_bound_m1(double l_c, double c) {
    if (!(c > 0.0) || l_c < 0.0)
        throw std::domain_error("wasserstein_bound_m1: need c > 0 and L >= 0");
    return 30.0 * (std::cbrt(c) + 6.0 * std::sqrt(l_c));
}

inline BoundReport wasserstein_m2_report(double u_half_c, double c) {
    BoundReport rep;
    rep.kind = BoundKind::wasserstein_m2;
    rep.c_used = c;
    const double c_term = 30.0 * std::cbrt(c);
    const double tail_term = 360.0 * std::sqrt(u_half_c);
    const double uncapped = wasserstein_bound_m2(u_half_c, c);
    rep.terms = {{"c_term", c_term}, {"tail_term", tail_term}, {"uncapped", uncapped}};
    rep.value = std::min(uncapped, kSqrt2);
    return rep;
}

inline BoundReport wasserstein_m1_report(double l_c, double c) {
    BoundReport rep;
    rep.kind = BoundKind::wasserstein_m1;
    rep.c_used = c;
    const double c_term = 30.0 * std::cbrt(c);
    const double tail_term = 180.0 * std::sqrt(l_c);
    const double uncapped = wasserstein_bound_m1(l_c, c);
    rep.terms = {{"c_term", c_term}, {"tail_term", tail_term}, {"uncapped", uncapped}};
    rep.value = std::min(uncapped, kSqrt2);
    return rep;
}

inline double kolmogorov_from_wasserstein(double dw) {
    if (dw < 0.0) throw std::domain_error("kolmogorov_from_wasserstein: d_W must be >= 0");
    return std::min(1.0, 2.0 * std::sqrt(dw));
}

inline BoundReport kolmogorov_report(double dw, double c_used) {
    BoundReport rep;
    rep.kind = BoundKind::kolmogorov;
    rep.c_used = c_used;
    const double uncapped = 2.0 * std::sqrt(dw);
    rep.terms = {{"dw_input", dw}, {"uncapped", uncapped}};
    rep.value = std::min(1.0, uncapped);
    return rep;
}

// dw_bound must be the uncapped Wasserstein bound 30*B.
inline double tv_bound(double dw_bound, double l_n) {
    if (dw_bound < 0.0 || l_n < 0.0) throw std::domain_error("tv_bound: negative input");
    const double b = dw_bound / 30.0;
    const double value = std::sqrt(120.0) * std::sqrt(b) +
                         std::cbrt(30.0) * std::pow(l_n, 2.0 / 3.0) * std::cbrt(b);
    return std::min(1.0, value);
}

inline BoundReport tv_report(double dw_bound, double l_n, double c_used) {
    BoundReport rep;
    rep.kind = BoundKind::tv;
    rep.c_used = c_used;
    rep.l_n = l_n;
    const double b = dw_bound / 30.0;
    const double sqrt_term = std::sqrt(120.0) * std::sqrt(b);
    const double l_term = std::cbrt(30.0) * std::pow(l_n, 2.0 / 3.0) * std::cbrt(b);
    rep.terms = {{"sqrt_term", sqrt_term}, {"l_term", l_term}, {"uncapped", sqrt_term + l_term}};
    rep.value = std::min(1.0, sqrt_term + l_term);
    return rep;
}

struct BoundCurve {
    BoundKind kind = BoundKind::wasserstein_m2;
    std::vector<double> grid;               // ascending c values
    std::vector<double> values;             // uncapped formula value per grid point
    std::vector<double> pessimistic;        // same with functional + 5 SE
    std::vector<double> functional;         // U(c/2) or L(c) per point
    std::vector<double> functional_se;
    FunctionalMethod method = FunctionalMethod::analytic;
    double sigma2 = 0.0;
    std::int64_t k = 0;
    std::size_t argmin = 0;       // on `values`, ties toward smaller c
    std::size_t argmin_pess = 0;  // on `pessimistic`

    // every grid value is a valid bound, so the curve minimum is too; the
    // sqrt(2) cap stays a separate, equally valid bound
    double min_value() const { return values[argmin]; }
    double min_pessimistic() const { return pessimistic[argmin_pess]; }
    double min_value_capped() const { return std::min(min_value(), kSqrt2); }
    double min_pessimistic_capped() const { return std::min(min_pessimistic(), kSqrt2); }
    double c_at_argmin() const { return grid[argmin]; }
};

// 200 log-spaced points on [1e-4, 10] plus the family's special points: the
// bounded-case level c = 2 m gamma and the thresholds where the truncated
// second moments change analytic form.
inline std::vector<double> default_c_grid(const ArraySpec& spec, int points = 200,
                                          double c_min = 1e-4, double c_max = 10.0) {
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points) + 16);
    for (int i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / (points - 1);
        grid.push_back(c_min * std::pow(c_max / c_min, f));
    }
    if (spec.max_abs_over_sigma && *spec.max_abs_over_sigma > 0.0)
        grid.push_back(2.0 * spec.dep_range * *spec.max_abs_over_sigma);
    if (spec.sigma2) {
        const double sigma = std::sqrt(*spec.sigma2);
        const AnalyticTails tails = analytic_tails(spec);
        for (double u : tails.coord_breakpoints)
            grid.push_back(2.0 * spec.dep_range * u / sigma);
        for (double y : tails.block_breakpoints) grid.push_back(y / sigma);
    }
    std::erase_if(grid, [](double c) { return !(c > 0.0) || !std::isfinite(c); });
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

inline BoundCurve minimize_bound(const ArraySpec& spec, BoundKind kind,
                                 std::span<const double> grid, std::int64_t k,
                                 std::uint64_t seed_root = 1) {
    if (grid.empty()) throw invalid_spec_error("minimize_bound: empty c grid");
    if (kind != BoundKind::wasserstein_m2 && kind != BoundKind::wasserstein_m1)
        throw invalid_spec_error("minimize_bound: only the Wasserstein kinds are minimizable");

    BoundCurve curve;
    curve.kind = kind;
    curve.grid.assign(grid.begin(), grid.end());
    std::sort(curve.grid.begin(), curve.grid.end());
    curve.grid.erase(std::unique(curve.grid.begin(), curve.grid.end()), curve.grid.end());
    for (double c : curve.grid)
        if (!(c > 0.0)) throw invalid_spec_error("minimize_bound: grid values must be > 0");
    curve.k = k;

    GridFunctional func;
    if (kind == BoundKind::wasserstein_m2) {
        std::vector<double> half(curve.grid.size());
        for (std::size_t j = 0; j < curve.grid.size(); ++j) half[j] = 0.5 * curve.grid[j];
        const FunctionalMethod method = analytic_U_available(spec, half)
                                            ? FunctionalMethod::analytic
                                            : FunctionalMethod::monte_carlo;
        func = compute_U_grid(spec, half, method, k, seed_root);
    } else {
        const FunctionalMethod method = analytic_L_available(spec, curve.grid)
                                            ? FunctionalMethod::analytic
                                            : FunctionalMethod::monte_carlo;
        func = compute_L_grid(spec, curve.grid, method, k, seed_root);
    }
    curve.method = func.method;
    curve.sigma2 = func.sigma2;
    curve.functional = func.value;
    curve.functional_se = func.std_err;

    curve.values.resize(curve.grid.size());
    curve.pessimistic.resize(curve.grid.size());
    for (std::size_t j = 0; j < curve.grid.size(); ++j) {
        const double c = curve.grid[j];
        const double f = func.value[j];
        const double f_pess = f + 5.0 * func.std_err[j];
        if (kind == BoundKind::wasserstein_m2) {
            curve.values[j] = wasserstein_bound_m2(f, c);
            curve.pessimistic[j] = wasserstein_bound_m2(f_pess, c);
        } else {
            curve.values[j] = wasserstein_bound_m1(f, c);
            curve.pessimistic[j] = wasserstein_bound_m1(f_pess, c);
        }
    }
    curve.argmin = 0;
    curve.argmin_pess = 0;
    for (std::size_t j = 1; j < curve.grid.size(); ++j) {
        if (curve.values[j] < curve.values[curve.argmin]) curve.argmin = j;
        if (curve.pessimistic[j] < curve.pessimistic[curve.argmin_pess]) curve.argmin_pess = j;
    }
    return curve;
}

} // namespace mdclt
