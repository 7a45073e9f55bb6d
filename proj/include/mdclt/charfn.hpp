#pragma once

// Closed-form |characteristic function| models and the smoothness functional
//
//   l = 2 \int_0^inf t |phi(t)| dt,
//
// evaluated by adaptive Gauss-Kronrod bisection with a certified tail: each
// model carries an envelope that dominates |phi| together with the closed
// form of \int_T^inf 2 t env(t) dt, so the truncation error is bounded, not
// guessed.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mdclt/errors.hpp"

namespace mdclt {

struct CharFnModel {
    std::function<double(double)> abs_cf;    // t -> |phi(t)|
    std::function<double(double)> envelope;  // dominates abs_cf for t >= t_env
    double t_env = 0.0;
    std::function<double(double)> env_tail;  // T -> \int_T^inf 2 t env(t) dt (may be +inf)
    double t_scale = 1.0;                    // decay scale of abs_cf, for the initial grid
    std::string label;
};

inline CharFnModel gaussian_cf_model() {
    CharFnModel m;
    m.abs_cf = [](double t) { return std::exp(-0.5 * t * t); };
    m.envelope = m.abs_cf;
    m.t_env = 0.0;
    m.env_tail = [](double T) { return 2.0 * std::exp(-0.5 * T * T); };
    m.t_scale = 1.0;
    m.label = "gaussian";
    return m;
}

inline CharFnModel scaled_gaussian_cf_model(double s) {
    if (!(s > 0.0)) throw invalid_spec_error("scaled gaussian cf: s must be > 0");
    CharFnModel m;
    m.abs_cf = [s](double t) { return std::exp(-0.5 * s * s * t * t); };
    m.envelope = m.abs_cf;
    m.t_env = 0.0;
    m.env_tail = [s](double T) { return 2.0 * std::exp(-0.5 * s * s * T * T) / (s * s); };
    m.t_scale = 1.0 / s;
    m.label = "scaled_gaussian";
    return m;
}

namespace detail {

inline double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

// per-coordinate factor of the two-scale cf: the mean of cos(u x) over
// x in (1-a, 1), written in the cancellation-free product form.
inline double union_cf_factor(double u, double a) {
    return std::cos(u * (1.0 - 0.5 * a)) * sinc(0.5 * a * u);
}

} // namespace detail

// |phi_n| for the two-scale family: product of the n-fold scaled-uniform
// factor and the cos^2 bridge factor from the two shared sign variables.
inline CharFnModel two_scale_cf(std::int64_t n, double alpha, double a) {
    if (n < 2) throw invalid_spec_error("two_scale_cf: n must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0 / 3.0))
        throw invalid_spec_error("two_scale_cf: alpha must lie in (0, 1/3)");
    if (!(a > 0.0 && a < 1.0)) throw invalid_spec_error("two_scale_cf: a must lie in (0,1)");

    const double nd = static_cast<double>(n);
    const double ev2 = (1.0 - std::pow(1.0 - a, 3)) / (3.0 * a);
    const double sigma2 = ev2 + 2.0 * std::pow(nd, -2.0 * alpha);
    const double sigma = std::sqrt(sigma2);
    const double u_scale = 1.0 / (std::sqrt(nd) * sigma);  // u = t * u_scale
    const double bridge_freq = std::pow(nd, -alpha) / sigma;

    CharFnModel m;
    m.abs_cf = [=](double t) {
        const double g = std::abs(detail::union_cf_factor(t * u_scale, a));
        const double cosb = std::cos(t * bridge_freq);
        return std::pow(g, nd) * cosb * cosb;
    };
    // |factor| <= min(1, 2/(a u)); integrable against t dt once past u = 2/a.
    const double beta = 2.0 / (a * u_scale);  // t where the power-law branch reaches 1
    m.envelope = [=](double t) {
        const double u = t * u_scale;
        const double bound = std::min(1.0, 2.0 / (a * u));
        return std::pow(bound, nd);
    };
    m.t_env = 0.0;
    m.env_tail = [=](double T) {
        if (n <= 2) return std::numeric_limits<double>::infinity();
        const double power_tail = [&](double from) {
            // \int_from^inf 2 t (beta/t)^n dt, from >= beta
            return 2.0 * from * from * std::pow(beta / from, nd) / (nd - 2.0);
        }(std::max(T, beta));
        if (T >= beta) return power_tail;
        return (beta * beta - T * T) + power_tail;  // env = 1 on [T, beta)
    };
    m.t_scale = 1.0;
    m.label = "two_scale(n=" + std::to_string(n) + ")";
    return m;
}

namespace detail {

// 15-point Kronrod / 7-point Gauss pair on [a,b]; returns the Kronrod value
// and |K15 - G7| as the error estimate.
struct GkResult {
    double value;
    double err;
};

inline GkResult gk15(const std::function<double(double)>& f, double a, double b) {
    static const double xgk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static const double wgk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static const double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = fc * wg[3];
    double resk = fc * wgk[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double fsum = f(center - dx) + f(center + dx);
        resk += wgk[j] * fsum;
        if (j % 2 == 1) resg += wg[j / 2] * fsum;
    }
    return {resk * half, std::abs((resk - resg) * half)};
}

// `budget` caps the total number of bisections per compute_l call, so a
// hostile integrand (endless oscillation in the far tail) degrades to a
// coarse estimate instead of exponential recursion.
inline double adaptive_panel(const std::function<double(double)>& f, double a, double b,
                             double tol, int depth, long& budget) {
    const GkResult r = gk15(f, a, b);
    if (r.err <= tol || depth >= 40 || budget <= 0) return r.value;
    --budget;
    const double mid = 0.5 * (a + b);
    return adaptive_panel(f, a, mid, 0.5 * tol, depth + 1, budget) +
           adaptive_panel(f, mid, b, 0.5 * tol, depth + 1, budget);
}

} // namespace detail

// l = 2 \int_0^inf t |phi(t)| dt with relative tolerance rel_tol plus a
// certified envelope tail below rel_tol times the running value. Throws
// divergence_suspected_error when no truncation point can be certified
// (which is the expected outcome when l is infinite).
inline double compute_l(const CharFnModel& model, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw invalid_spec_error("compute_l: rel_tol must lie in (0,1)");
    if (!model.abs_cf) throw invalid_spec_error("compute_l: model has no |cf| evaluator");
    if (!model.env_tail)
        throw divergence_suspected_error("compute_l: model has no integrable envelope");

    const auto integrand = [&](double t) { return 2.0 * t * model.abs_cf(t); };
    const double scale = model.t_scale > 0.0 ? model.t_scale : 1.0;

    // dense core panels where the integrand lives, then geometric extension
    std::vector<double> edges;
    const double t_core = 16.0 * scale;
    const int core_panels = 64;
    for (int i = 0; i <= core_panels; ++i)
        edges.push_back(t_core * static_cast<double>(i) / core_panels);

    long budget = 200000;
    const auto integrate_new_panels = [&](std::size_t first_edge, double tol_per_width) {
        double acc = 0.0;
        for (std::size_t i = first_edge; i + 1 < edges.size(); ++i)
            acc += detail::adaptive_panel(integrand, edges[i], edges[i + 1],
                                          tol_per_width * (edges[i + 1] - edges[i]), 0, budget);
        return acc;
    };

    // rough value to turn the relative tolerance into an absolute one
    double rough = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        rough += detail::gk15(integrand, edges[i], edges[i + 1]).value;
    const double floor_val = 1e-12;
    double abs_tol = rel_tol * std::max(std::abs(rough), floor_val);

    double total = integrate_new_panels(0, abs_tol / edges.back());

    // extend until the certified envelope tail is negligible
    int iter = 0;
    for (;;) {
        const double T = edges.back();
        const double tail = model.env_tail(T);
        if (std::isfinite(tail) && tail <= rel_tol * std::max(std::abs(total), floor_val)) break;
        if (++iter > 256)
            throw divergence_suspected_error("compute_l: tail bound not achieved for model '" +
                                             model.label + "'");
        const std::size_t first = edges.size() - 1;
        double next = T * 1.5;
        edges.push_back(next);
        abs_tol = rel_tol * std::max(std::abs(total), floor_val);
        total += integrate_new_panels(first, abs_tol / std::max(next, 1.0));
    }
    return total;
}

} // namespace mdclt
