// Batch experiment runner: bounds / estimate / verify-internals / reproduce.
//
// Results go to stdout as CSV (and to --out DIR together with a manifest
// carrying the config hash and seed); progress notes go to stderr. Exit
// codes: 0 success, 1 check failure, 2 usage or config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdclt/mdclt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string c_grid;
    std::string seed;
    std::string replicates;
    std::vector<std::string> metrics;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--seed", opts.seed, "root seed (64-bit)");
    cmd->add_option("--replicates", opts.replicates, "Monte Carlo replicates per spec");
    cmd->add_option("--out", opts.out_dir, "output directory for CSV + manifest");
    cmd->add_option("--c-grid", opts.c_grid, "truncation grid as min:max:points");
    cmd->add_option("--metric", opts.metrics, "metric (W, K or TV); repeatable")
        ->check(CLI::IsMember({"W", "K", "TV"}));
}

mdclt::ExperimentConfig build_config(const CommonOpts& opts) {
    mdclt::FlatConfig cfg = opts.config_path.empty()
                                ? mdclt::FlatConfig::from_string("")
                                : mdclt::FlatConfig::from_file(opts.config_path);
    // CLI flags override file keys
    if (!opts.seed.empty()) cfg.set("seed", opts.seed);
    if (!opts.replicates.empty()) cfg.set("replicates", opts.replicates);
    if (!opts.out_dir.empty()) cfg.set("out", opts.out_dir);
    if (!opts.c_grid.empty()) cfg.set("c_grid", opts.c_grid);
    if (!opts.metrics.empty()) {
        std::string joined;
        for (const auto& m : opts.metrics) {
            if (!joined.empty()) joined += ',';
            joined += m;
        }
        cfg.set("metrics", joined);
    }
    return mdclt::load_experiment_config(cfg);
}

void emit_outputs(const mdclt::ExperimentConfig& ec, const std::string& command,
                  const std::string& csv_name, const std::string& csv_text,
                  std::int64_t rows) {
    std::cout << csv_text;
    if (ec.out_dir.empty()) return;
    fs::create_directories(ec.out_dir);
    const fs::path csv_path = fs::path(ec.out_dir) / csv_name;
    {
        std::ofstream out(csv_path, std::ios::binary);
        out << csv_text;
    }
    json manifest;
    manifest["command"] = command;
    manifest["config_hash"] = mdclt::config_hash(ec.canonical);
    manifest["seed"] = ec.seed;
    manifest["replicates"] = ec.replicates;
    manifest["rows"] = rows;
    manifest["outputs"] = json::array({csv_name});
    std::ofstream mf(fs::path(ec.out_dir) / "manifest.json", std::ios::binary);
    mf << manifest.dump(2) << "\n";
    std::cerr << "wrote " << csv_path.string() << "\n";
}

struct FamilyColumns {
    std::string family, n, m, t, alpha, a;
};

FamilyColumns family_columns(const mdclt::ArraySpec& spec) {
    using namespace mdclt;
    FamilyColumns c;
    c.n = fmt_int(spec.n_vars);
    c.m = fmt_int(spec.dep_range);
    if (const auto* mw = std::get_if<MovingWindowFamily>(&spec.family)) {
        (void)mw;
        c.family = "moving_window";
    } else if (const auto* ht = std::get_if<HeavyTailFamily>(&spec.family)) {
        c.family = "heavy_tail";
        c.t = fmt_int(ht->t);
    } else if (const auto* ts = std::get_if<TwoScaleFamily>(&spec.family)) {
        c.family = "two_scale";
        c.alpha = fmt_double(ts->alpha);
        c.a = fmt_double(ts->a);
    }
    return c;
}

std::vector<double> grid_for(const mdclt::ExperimentConfig& ec, const mdclt::ArraySpec& spec) {
    if (ec.c_grid)
        return mdclt::default_c_grid(spec, ec.c_grid->points, ec.c_grid->c_min, ec.c_grid->c_max);
    return mdclt::default_c_grid(spec);
}

int cmd_bounds(const CommonOpts& opts) {
    using namespace mdclt;
    ExperimentConfig ec = build_config(opts);
    if (ec.replicates == 0) ec.replicates = 10000;
    const std::vector<ArraySpec> specs = expand_specs(ec);

    std::ostringstream csv;
    CsvWriter w(csv);
    w.row({"label", "family", "N", "m", "t", "alpha", "a", "sigma2", "k", "seed", "method",
           "c_argmin", "u_half_c", "u_se", "dw_bound", "c_argmin_pess", "dw_bound_pess",
           "dw_uncapped", "dk_bound", "l_n", "tv_bound", "tv_uncapped"});

    for (std::size_t i = 0; i < specs.size(); ++i) {
        const ArraySpec& spec = specs[i];
        std::cerr << "bounds: " << spec.label << "\n";
        const std::uint64_t point_seed = derive_replicate_seed(ec.seed, i);
        const std::vector<double> grid = grid_for(ec, spec);
        const BoundCurve curve =
            minimize_bound(spec, BoundKind::wasserstein_m2, grid, ec.replicates, point_seed);

        const std::size_t j = curve.argmin;
        const BoundReport rep = wasserstein_m2_report(curve.functional[j], curve.grid[j]);
        const double dk = kolmogorov_from_wasserstein(curve.min_value_capped());

        std::string l_str, tv_str, tv_unc_str;
        if (const auto* ts = std::get_if<TwoScaleFamily>(&spec.family)) {
            const double l = compute_l(two_scale_cf(ts->n, ts->alpha, ts->a), 1e-8);
            const BoundReport tv = tv_report(rep.term("uncapped"), l, curve.grid[j]);
            l_str = fmt_double(l);
            tv_str = fmt_double(tv.value);
            tv_unc_str = fmt_double(tv.term("uncapped"));
        }

        const FamilyColumns fc = family_columns(spec);
        w.row({spec.label, fc.family, fc.n, fc.m, fc.t, fc.alpha, fc.a, fmt_double(curve.sigma2),
               fmt_int(ec.replicates), fmt_int(static_cast<std::int64_t>(point_seed)),
               curve.method == FunctionalMethod::analytic ? "analytic" : "monte-carlo",
               fmt_double(curve.grid[j]), fmt_double(curve.functional[j]),
               fmt_double(curve.functional_se[j]), fmt_double(curve.min_value_capped()),
               fmt_double(curve.grid[curve.argmin_pess]),
               fmt_double(curve.min_pessimistic_capped()), fmt_double(curve.min_value()),
               fmt_double(dk), l_str, tv_str, tv_unc_str});
    }
    emit_outputs(ec, "bounds", "bounds.csv", csv.str(), static_cast<std::int64_t>(specs.size()));
    return 0;
}

int cmd_estimate(const CommonOpts& opts) {
    using namespace mdclt;
    ExperimentConfig ec = build_config(opts);
    if (ec.replicates == 0) ec.replicates = 10000;
    const std::vector<ArraySpec> specs = expand_specs(ec);

    std::ostringstream csv;
    CsvWriter w(csv);
    w.row({"label", "metric", "point", "ci_low", "ci_high", "std_err", "k", "estimator",
           "bracket_bias", "seed"});

    std::int64_t rows = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const ArraySpec& spec = specs[i];
        std::cerr << "estimate: " << spec.label << "\n";
        const std::uint64_t point_seed = derive_replicate_seed(ec.seed, i);
        const SigmaInfo sig = sigma2_for(spec, ec.replicates, point_seed);
        std::vector<double> sums =
            sample_standardized_sums(spec, ec.replicates, point_seed, std::sqrt(sig.sigma2));

        const bool want_w = std::count(ec.metrics.begin(), ec.metrics.end(), Metric::W) > 0;
        const bool want_k = std::count(ec.metrics.begin(), ec.metrics.end(), Metric::K) > 0;
        const bool want_tv = std::count(ec.metrics.begin(), ec.metrics.end(), Metric::TV) > 0;

        const auto emit = [&](const DistanceEstimate& est) {
            w.row({spec.label, metric_name(est.metric), fmt_double(est.point),
                   fmt_double(est.ci_low), fmt_double(est.ci_high), fmt_double(est.std_err),
                   fmt_int(est.k), est.estimator,
                   est.bracket_bias ? fmt_double(*est.bracket_bias) : std::string{},
                   fmt_int(static_cast<std::int64_t>(point_seed))});
            ++rows;
        };

        if (want_w || want_k) {
            EmpiricalDistances est(sums);
            auto [dw, dk] = est.wasserstein_and_kolmogorov(derive_replicate_seed(point_seed, 1),
                                                           ec.resamples);
            if (want_w) emit(dw);
            if (want_k) emit(dk);
        }
        if (want_tv)
            emit(empirical_tv_to_normal(sums, ec.bins, derive_replicate_seed(point_seed, 2),
                                        ec.resamples));

        // finite-support specs also get the exact enumeration values, so the
        // empirical columns can be validated offline from the same file
        try {
            const AtomicLaw law = exact_law(spec);
            if (want_w) emit(exact_distance_estimate(law, Metric::W));
            if (want_k) emit(exact_distance_estimate(law, Metric::K));
        } catch (const invalid_spec_error&) {
        } catch (const enumeration_limit_error&) {
        }
    }
    emit_outputs(ec, "estimate", "estimate.csv", csv.str(), rows);
    return 0;
}

int cmd_verify_internals(const CommonOpts& opts, bool mutate) {
    using namespace mdclt;
    ExperimentConfig ec = build_config(opts);

    std::ostringstream csv;
    CsvWriter w(csv);
    w.row({"chain", "n", "check", "value", "threshold", "pass"});

    std::int64_t failures = 0;
    const double tol = 1e-12;
    for (std::int64_t i = 0; i < ec.chains; ++i) {
        const FiniteChain chain = random_finite_chain(derive_replicate_seed(ec.seed, static_cast<std::uint64_t>(i)));
        MartingaleTrace trace = martingale_decompose(chain);
        if (mutate && i == 0) {
            // test hook: corrupt one conditional expectation
            trace.y[1][0] += 1e-6;
        }

        const auto note = [&](const std::string& check, double value, double threshold, bool pass) {
            w.row({fmt_int(i), fmt_int(chain.n), check, fmt_double(value), fmt_double(threshold),
                   pass ? "1" : "0"});
            if (!pass) {
                ++failures;
                std::cerr << "FAIL chain " << i << " (seed index " << i << "): " << check << "\n";
            }
        };

        const IdentityReport idr = verify_identities(trace, tol);
        note("martingale_identities",
             std::max({idr.max_cond_y_dev, idr.max_sum_dev, idr.sum_ey2_rel_dev,
                       idr.max_martingale_dev}),
             tol, idr.ok(tol));
        const Vg8Report vg = check_vg8uj2(trace);
        note("conditional_variance_concentration", vg.lhs, vg.bound, vg.margin >= -tol * vg.bound);
        const TauReport tau = stopping_time_tau(trace);
        note("unit_conditional_variance", tau.max_unit_variance_dev, tol,
             tau.max_unit_variance_dev <= tol && tau.stopping_time_ok);
        for (double c : {0.25, 1.0}) {
            const TruncationSplitReport ts = truncation_split(chain, c, tol);
            note("truncation_split_c=" + fmt_double(c),
                 std::max(ts.var_trunc_tail - 3.0 * ts.l_of_c,
                          std::abs(ts.sigma_c2 - 1.0) - 13.0 * ts.l_of_c),
                 tol, ts.var_bound_ok && ts.sigma_bound_ok);
        }
    }
    emit_outputs(ec, "verify-internals", "verify_internals.csv", csv.str(), ec.chains);
    if (failures > 0) {
        std::cerr << failures << " check(s) failed\n";
        return 1;
    }
    std::cerr << "all checks passed (" << ec.chains << " chains)\n";
    return 0;
}

int cmd_reproduce(const CommonOpts& opts, const std::string& id) {
    using namespace mdclt;
    ExperimentConfig ec = build_config(opts);

    std::ostringstream csv;
    CsvWriter w(csv);
    std::int64_t rows = 0;

    if (id == "two-scale") {
        const double alpha = 0.3, a = 0.2;
        const std::int64_t k = ec.replicates == 0 ? 2000 : ec.replicates;
        w.row({"n", "alpha", "a", "sigma2", "k", "c_bounded", "dw_bound_at_c_uncapped",
               "rate_60_n_alpha3", "min_bound", "c_argmin", "dw_empirical", "dw_ci_low",
               "dw_ci_high"});
        std::size_t idx = 0;
        for (std::int64_t n : {1000, 10000, 100000}) {
            std::cerr << "reproduce two-scale: n=" << n << "\n";
            const ArraySpec spec = two_scale_example_spec(n, alpha, a);
            const std::uint64_t point_seed = derive_replicate_seed(ec.seed, idx++);
            const double c = 8.0 * std::pow(static_cast<double>(n), -alpha);
            const double c_half[1] = {0.5 * c};
            const GridFunctional u =
                compute_U_grid(spec, c_half, FunctionalMethod::analytic, k, point_seed);
            const double bound_at_c = wasserstein_bound_m2(u.value[0], c);  // uncapped rate value
            const double rate = 60.0 * std::pow(static_cast<double>(n), -alpha / 3.0);
            const BoundCurve curve = minimize_bound(spec, BoundKind::wasserstein_m2,
                                                    default_c_grid(spec), k, point_seed);
            std::vector<double> sums =
                sample_standardized_sums(spec, k, point_seed, std::sqrt(exact_sigma2(spec)));
            EmpiricalDistances est(std::move(sums));
            auto [dw, dk] = est.wasserstein_and_kolmogorov(derive_replicate_seed(point_seed, 1),
                                                           ec.resamples);
            (void)dk;
            w.row({fmt_int(n), fmt_double(alpha), fmt_double(a), fmt_double(exact_sigma2(spec)),
                   fmt_int(k), fmt_double(c), fmt_double(bound_at_c), fmt_double(rate),
                   fmt_double(curve.min_value_capped()), fmt_double(curve.c_at_argmin()),
                   fmt_double(dw.point), fmt_double(dw.ci_low), fmt_double(dw.ci_high)});
            ++rows;
        }
        emit_outputs(ec, "reproduce", "two_scale.csv", csv.str(), rows);
        return 0;
    }

    if (id == "heavy-tail") {
        w.row({"m", "t", "N", "sigma2", "k", "U1_analytic", "L1_mc", "L1_se"});
        std::size_t idx = 0;
        for (int m : {4, 8, 16, 32}) {
            std::cerr << "reproduce heavy-tail: m=" << m << "\n";
            const int t = m * m;
            const ArraySpec spec = heavy_tail_example_spec(m, t);
            const std::uint64_t point_seed = derive_replicate_seed(ec.seed, idx++);
            const std::int64_t k =
                ec.replicates == 0 ? std::max<std::int64_t>(12000, 800000 / m) : ec.replicates;
            const TruncationReport u = compute_U(spec, 1.0, FunctionalMethod::analytic);
            const TruncationReport l = compute_L(spec, 1.0, k, point_seed);
            w.row({fmt_int(m), fmt_int(t), fmt_int(spec.n_vars), fmt_double(exact_sigma2(spec)),
                   fmt_int(k), fmt_double(*u.u_of_c), fmt_double(*l.l_of_c),
                   fmt_double(l.std_err.value_or(0.0))});
            ++rows;
        }
        emit_outputs(ec, "reproduce", "heavy_tail.csv", csv.str(), rows);
        return 0;
    }

    if (id == "tv-example") {
        const std::int64_t n = 10000;
        const double alpha = 0.2;
        const std::int64_t k = ec.replicates == 0 ? 20000 : ec.replicates;
        w.row({"n", "alpha", "a", "sigma2", "k", "l_n", "c_used", "tv_bound", "tv_uncapped",
               "tv_empirical", "tv_bracket_bias", "diag_a4_n_alpha3"});
        std::size_t idx = 0;
        for (double a : {0.4, 0.2}) {
            std::cerr << "reproduce tv-example: a=" << a << "\n";
            const ArraySpec spec = two_scale_example_spec(n, alpha, a);
            const std::uint64_t point_seed = derive_replicate_seed(ec.seed, idx++);
            const double l = compute_l(two_scale_cf(n, alpha, a), 1e-8);
            const double c = 8.0 * std::pow(static_cast<double>(n), -alpha);
            const double c_half[1] = {0.5 * c};
            const GridFunctional u =
                compute_U_grid(spec, c_half, FunctionalMethod::analytic, k, point_seed);
            const double dw_uncapped = wasserstein_bound_m2(u.value[0], c);
            const BoundReport tv = tv_report(dw_uncapped, l, c);
            std::vector<double> sums =
                sample_standardized_sums(spec, k, point_seed, std::sqrt(exact_sigma2(spec)));
            const DistanceEstimate tv_emp = empirical_tv_to_normal(
                sums, ec.bins, derive_replicate_seed(point_seed, 2), ec.resamples);
            const double diag = std::pow(a, 4.0) * std::pow(static_cast<double>(n), alpha / 3.0);
            w.row({fmt_int(n), fmt_double(alpha), fmt_double(a), fmt_double(exact_sigma2(spec)),
                   fmt_int(k), fmt_double(l), fmt_double(c), fmt_double(tv.value),
                   fmt_double(tv.term("uncapped")), fmt_double(tv_emp.point),
                   fmt_double(tv_emp.bracket_bias.value_or(0.0)), fmt_double(diag)});
            ++rows;
        }
        emit_outputs(ec, "reproduce", "tv_example.csv", csv.str(), rows);
        return 0;
    }

    std::cerr << "unknown reproduce id '" << id
              << "' (expected: heavy-tail | two-scale | tv-example)\n";
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"explicit CLT bounds for m-dependent arrays: compute, verify, reproduce"};
    app.require_subcommand(1);

    CommonOpts bounds_opts, estimate_opts, verify_opts, repro_opts;
    bool mutate = false;
    std::string repro_id;

    CLI::App* bounds = app.add_subcommand("bounds", "evaluate and minimize the distance bounds");
    add_common(bounds, bounds_opts);
    CLI::App* estimate = app.add_subcommand("estimate", "empirical distances to the normal");
    add_common(estimate, estimate_opts);
    CLI::App* verify =
        app.add_subcommand("verify-internals", "exact checks of the martingale decomposition");
    add_common(verify, verify_opts);
    verify->add_flag("--mutate", mutate, "test hook: corrupt one conditional expectation");
    CLI::App* repro = app.add_subcommand("reproduce", "rebuild a worked example table");
    repro->add_option("id", repro_id, "heavy-tail | two-scale | tv-example")->required();
    add_common(repro, repro_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (bounds->parsed()) return cmd_bounds(bounds_opts);
        if (estimate->parsed()) return cmd_estimate(estimate_opts);
        if (verify->parsed()) return cmd_verify_internals(verify_opts, mutate);
        if (repro->parsed()) return cmd_reproduce(repro_opts, repro_id);
    } catch (const mdclt::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mdclt::invalid_spec_error& e) {
        std::cerr << "invalid spec: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
