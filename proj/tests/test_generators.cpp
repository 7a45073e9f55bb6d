#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"

using namespace mdclt;

namespace {

double column_correlation(const SampleBatch& batch, std::int64_t i, std::int64_t j) {
    MomentAccumulator xi, xj, prod;
    for (std::int64_t r = 0; r < batch.k; ++r) {
        const auto row = batch.row(r);
        xi.add(row[static_cast<std::size_t>(i)]);
        xj.add(row[static_cast<std::size_t>(j)]);
        prod.add(row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)]);
    }
    const double cov = prod.mean() - xi.mean() * xj.mean();
    return cov / std::sqrt(xi.variance() * xj.variance());
}

} // namespace

TEST_CASE("moving window: iid case sigma^2 = N") {
    const auto spec = moving_window_spec(10, 0, MarginalModel::standard_normal(), {1.0});
    CHECK(exact_sigma2(spec) == Catch::Approx(10.0).margin(1e-12));
    CHECK(spec.dep_range == 1);  // independent rows are treated as 1-dependent
    const auto spec7 = moving_window_spec(7, 0, MarginalModel::rademacher(), {1.0});
    CHECK(exact_sigma2(spec7) == 7.0);
}

TEST_CASE("moving window: telescoping window, enumeration oracle") {
    // X_i = eps_i - eps_{i+1}, N=3: S = eps_1 - eps_4. Oracle: enumerate the
    // 16 sign patterns and average S^2 directly.
    double oracle = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
        double e[4];
        for (int b = 0; b < 4; ++b) e[b] = (mask >> b) & 1 ? 1.0 : -1.0;
        const double s = (e[0] - e[1]) + (e[1] - e[2]) + (e[2] - e[3]);
        oracle += s * s / 16.0;
    }
    CHECK(oracle == 2.0);
    const auto spec = moving_window_spec(3, 1, MarginalModel::rademacher(), {1.0, -1.0});
    CHECK(exact_sigma2(spec) == Catch::Approx(oracle).margin(1e-14));
}

TEST_CASE("moving window: rejects degenerate inputs") {
    CHECK_THROWS_AS(moving_window_spec(5, 1, MarginalModel::rademacher(), {0.0, 0.0}),
                    invalid_spec_error);
    CHECK_THROWS_AS(moving_window_spec(5, 1, MarginalModel::rademacher(), {1.0}),
                    invalid_spec_error);
    CHECK_THROWS_AS(
        moving_window_spec(5, 0, MarginalModel::finite({{0.5, 0.5}, {1.0, 0.5}}), {1.0}),
        invalid_spec_error);  // non-centered innovation
}

TEST_CASE("sampling: determinism and centering") {
    const auto spec = moving_window_spec(8, 1, MarginalModel::rademacher(), {1.0, -1.0});
    const auto b1 = sample_row(spec, 64, 4242);
    const auto b2 = sample_row(spec, 64, 4242);
    REQUIRE(b1.data.size() == b2.data.size());
    CHECK(b1.data == b2.data);  // bit-identical regeneration
    CHECK(b1.replicate_seeds[0] != b1.replicate_seeds[1]);

    const auto big = sample_row(spec, 100000, 777);
    for (std::int64_t col : {0, 3, 7}) {
        MomentAccumulator acc;
        for (std::int64_t r = 0; r < big.k; ++r) acc.add(big.row(r)[static_cast<std::size_t>(col)]);
        CHECK(std::abs(acc.mean()) <= 5.0 * acc.std_err());
    }
}

TEST_CASE("m-dependence: distant columns uncorrelated") {
    const auto mw = moving_window_spec(10, 1, MarginalModel::rademacher(), {1.0, -1.0});
    const auto batch = sample_row(mw, 100000, 31337);
    const double corr = column_correlation(batch, 2, 4);  // lag 2 > m = 1
    CHECK(std::abs(corr) <= 5.0 / std::sqrt(static_cast<double>(batch.k)));

    const auto ht = heavy_tail_example_spec(2, 4);
    const auto hb = sample_row(ht, 100000, 999);
    const double hcorr = column_correlation(hb, 0, 3);  // lag 3 > m = 2
    CHECK(std::abs(hcorr) <= 5.0 / std::sqrt(static_cast<double>(hb.k)));
}

TEST_CASE("heavy tail example: exact knowledge") {
    const auto spec = heavy_tail_example_spec(2, 4);
    CHECK(spec.n_vars == 10);
    CHECK(exact_sigma2(spec) == Catch::Approx(36.0).margin(1e-12));
    const auto marginal = MarginalModel::heavy_tail();
    CHECK(*marginal.second_moment() == 3.0);
    // closed-form truncated second moment, with a quadrature cross-check
    CHECK(marginal.tail_second_moment(2.0) == Catch::Approx(1.5).margin(1e-14));
    const double oracle =
        2.0 * testutil::simpson([](double x) { return x * x * 1.5 * std::pow(x, -4.0); }, 2.0,
                                50000.0, 2000000);
    CHECK(marginal.tail_second_moment(2.0) == Catch::Approx(oracle).margin(1e-3));
    CHECK(marginal.tail_second_moment(0.5) == 3.0);  // threshold below the support

    CHECK_THROWS_AS(heavy_tail_example_spec(2, 0), invalid_spec_error);
    CHECK_THROWS_AS(heavy_tail_example_spec(0, 4), invalid_spec_error);
}

TEST_CASE("heavy tail example: marginal second moment by Monte Carlo") {
    const auto spec = heavy_tail_example_spec(2, 4);
    const auto batch = sample_row(spec, 100000, 2024);
    MomentAccumulator m2;
    for (std::int64_t r = 0; r < batch.k; ++r) {
        const double v = batch.row(r)[0];
        m2.add(v * v);
    }
    CHECK(std::abs(m2.mean() - 3.0) <= 5.0 * m2.std_err());
    // last m coordinates alias one draw
    const auto row = batch.row(0);
    CHECK(row[8] == row[9]);
}

TEST_CASE("two-scale example: exact knowledge and a.s. bound") {
    CHECK_THROWS_AS(two_scale_example_spec(100, 0.4, 0.1), invalid_spec_error);
    CHECK_THROWS_AS(two_scale_example_spec(100, 0.2, 1.5), invalid_spec_error);

    // a -> 0: E V^2 -> 1
    const auto tiny = two_scale_example_spec(100, 0.2, 1e-9);
    CHECK(*tiny.sigma2 == Catch::Approx(1.0 + 2.0 * std::pow(100.0, -0.4)).epsilon(1e-6));

    const auto spec = two_scale_example_spec(100, 0.2, 0.1);
    const double ev2 = (1.0 - std::pow(0.9, 3)) / 0.3;
    CHECK(exact_sigma2(spec) == Catch::Approx(ev2 + 2.0 * std::pow(100.0, -0.4)).margin(1e-14));

    // sampled rows satisfy the a.s. bound exactly
    const double cap = *spec.max_abs_over_sigma * std::sqrt(exact_sigma2(spec));
    const auto batch = sample_row(spec, 2000, 5150);
    double max_abs = 0.0;
    for (std::int64_t r = 0; r < batch.k; ++r)
        for (double x : batch.row(r)) max_abs = std::max(max_abs, std::abs(x));
    CHECK(max_abs <= cap);

    // gamma < 4 n^{-alpha} for large n
    const auto big = two_scale_example_spec(100000, 0.2, 0.1);
    CHECK(*big.max_abs_over_sigma < 4.0 * std::pow(100000.0, -0.2));
}

TEST_CASE("marginal tail functions: value at zero and monotonicity") {
    const auto models = {MarginalModel::heavy_tail(), MarginalModel::uniform_union(0.35),
                         MarginalModel::rademacher(), MarginalModel::standard_normal(),
                         MarginalModel::finite({{-2.0, 0.125}, {0.0, 0.75}, {2.0, 0.125}})};
    for (const auto& m : models) {
        REQUIRE(m.second_moment().has_value());
        CHECK(m.tail_second_moment(0.0) == Catch::Approx(*m.second_moment()).margin(1e-14));
        double prev = m.tail_second_moment(0.0);
        for (int i = 1; i <= 40; ++i) {
            const double cur = m.tail_second_moment(0.1 * i);
            CHECK(cur <= prev + 1e-15);
            prev = cur;
        }
    }
}

TEST_CASE("exact sigma^2 vs Monte Carlo variance of S") {
    const std::vector<ArraySpec> specs = {
        moving_window_spec(12, 1, MarginalModel::rademacher(), {1.0, 0.5}),
        heavy_tail_example_spec(2, 4),
        two_scale_example_spec(200, 0.25, 0.3),
    };
    for (const auto& spec : specs) {
        const auto est = estimate_sigma2(spec, 200000, 8888);
        CHECK(std::abs(est.mean - exact_sigma2(spec)) <= 5.0 * est.se);
    }
}

TEST_CASE("sample-only marginal without sampler refuses to sample") {
    auto marginal = MarginalModel::sample_only(nullptr, 1.0);
    const auto spec = moving_window_spec(4, 0, marginal, {1.0});
    CHECK_THROWS_AS(sample_row(spec, 2, 1), unsupported_family_error);
    CHECK(exact_sigma2(spec) == 4.0);  // analytic variance still available
}

TEST_CASE("exact sigma^2 unavailable without innovation moments") {
    auto marginal = MarginalModel::sample_only([](Xoshiro256pp& rng) { return rng.sign(); });
    const auto spec = moving_window_spec(4, 0, marginal, {1.0});
    CHECK_THROWS_AS(exact_sigma2(spec), needs_estimation_error);
    const auto est = estimate_sigma2(spec, 50000, 4);
    CHECK(std::abs(est.mean - 4.0) <= 5.0 * est.se + 1e-9);
}

TEST_CASE("block sums: shapes, padding and sum preservation") {
    const auto spec = moving_window_spec(10, 1, MarginalModel::rademacher(), {1.0, -2.0});
    const auto batch = sample_row(spec, 500, 64);

    const auto b2 = block_sums(batch, 2);
    CHECK(b2.m_cols == 5);
    const auto b3 = block_sums(batch, 3);
    CHECK(b3.m_cols == 4);

    // integer-valued inputs: preservation is exact at the bit level
    for (std::int64_t r = 0; r < batch.k; ++r) {
        double row_total = 0.0, block_total = 0.0;
        for (double x : batch.row(r)) row_total += x;
        for (double y : b3.row(r)) block_total += y;
        CHECK(row_total == block_total);
    }
    // last block sums a single coordinate
    CHECK(b3.row(0)[3] == batch.row(0)[9]);

    SampleBatch zeros;
    zeros.k = 1;
    zeros.n = 5;
    zeros.data.assign(5, 0.0);
    const auto bz = block_sums(zeros, 2);
    for (double y : bz.row(0)) CHECK(y == 0.0);

    CHECK_THROWS_AS(block_sums(batch, 0), invalid_spec_error);
}

TEST_CASE("sum invariance under blocking for continuous families") {
    const auto spec = two_scale_example_spec(50, 0.2, 0.4);
    const auto batch = sample_row(spec, 200, 123);
    const auto blocked = block_sums(batch, 1);  // m = 1: blocks are coordinates
    CHECK(batch.data == blocked.data);
}

TEST_CASE("streaming reduction matches materialized batch") {
    const auto spec = heavy_tail_example_spec(2, 3);
    const auto batch = sample_row(spec, 1000, 31415);
    std::vector<double> sums_direct;
    for (std::int64_t r = 0; r < batch.k; ++r) {
        double s = 0.0;
        for (double x : batch.row(r)) s += x;
        sums_direct.push_back(s / 6.0);
    }
    const auto sums_stream = sample_standardized_sums(spec, 1000, 31415, 6.0);
    for (std::size_t i = 0; i < sums_direct.size(); ++i)
        CHECK(sums_stream[i] == Catch::Approx(sums_direct[i]).margin(1e-12));
}
