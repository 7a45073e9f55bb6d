#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"

using namespace mdclt;

TEST_CASE("independent chain: decomposition is the identity") {
    const auto chain = testutil::independent_rademacher_chain(5);
    const auto tr = martingale_decompose(chain);
    CHECK(tr.sigma2 == Catch::Approx(5.0).margin(1e-14));
    for (int i = 1; i <= 5; ++i)
        for (std::int64_t w = 0; w < tr.n_outcomes; ++w)
            CHECK(tr.y[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)] ==
                  tr.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(w)]);
    const auto rep = verify_identities(tr);
    CHECK(rep.ok(1e-14));
}

TEST_CASE("product chain: Y = X, V^2 = sigma^2 = 2, eight-outcome oracle") {
    // oracle: enumerate the 8 sign patterns of (e1,e2,e3) by hand
    double sigma2_oracle = 0.0;
    for (int mask = 0; mask < 8; ++mask) {
        const double e1 = (mask & 1) ? 1.0 : -1.0;
        const double e2 = (mask & 2) ? 1.0 : -1.0;
        const double e3 = (mask & 4) ? 1.0 : -1.0;
        const double s = e1 * e2 + e2 * e3;
        sigma2_oracle += s * s / 8.0;
    }
    CHECK(sigma2_oracle == 2.0);

    const auto chain = testutil::product_chain(2);
    const auto tr = martingale_decompose(chain);
    CHECK(tr.sigma2 == 2.0);
    for (std::int64_t w = 0; w < tr.n_outcomes; ++w) {
        CHECK(tr.y[1][static_cast<std::size_t>(w)] == tr.x[1][static_cast<std::size_t>(w)]);
        CHECK(tr.y[2][static_cast<std::size_t>(w)] == tr.x[2][static_cast<std::size_t>(w)]);
        CHECK(tr.v2[static_cast<std::size_t>(w)] == 2.0);
    }
    // V^2 constant: concentration left side is exactly zero
    const auto vg = check_vg8uj2(tr);
    CHECK(vg.lhs == 0.0);
    CHECK(vg.margin == vg.bound);
}

TEST_CASE("N = 1 chain: trivial filtration handled") {
    auto chain = testutil::independent_rademacher_chain(1);
    const auto tr = martingale_decompose(chain);
    CHECK(tr.sigma2 == 1.0);
    CHECK(verify_identities(tr).ok(1e-14));
    const auto tau = stopping_time_tau(tr);
    REQUIRE(tau.law.size() == 1);
    CHECK(tau.law[0].first == 1);
    CHECK(tau.law[0].second == 1.0);
}

TEST_CASE("identities hold on 50 random chains") {
    for (int s = 0; s < 50; ++s) {
        const auto chain = random_finite_chain(5000 + static_cast<std::uint64_t>(s));
        const auto tr = martingale_decompose(chain);
        const auto rep = verify_identities(tr);
        INFO("chain seed " << 5000 + s << ": " << rep.offending);
        CHECK(rep.ok(1e-12));
        const auto vg = check_vg8uj2(tr);
        CHECK(vg.margin >= 0.0);
    }
}

TEST_CASE("stopping time: law, measurability, unit conditional variance") {
    // identically scaled independent chain: W_N = 1 exactly, tau = N a.s.
    const auto chain = testutil::independent_rademacher_chain(6, 0.5);
    const auto tr = martingale_decompose(chain);
    const auto tau = stopping_time_tau(tr);
    REQUIRE(tau.law.size() == 1);
    CHECK(tau.law[0].first == 6);
    CHECK(tau.law[0].second == 1.0);
    // J_{N+1} vanishes: 1 - W_N = 0
    for (std::int64_t w = 0; w < tr.n_outcomes; ++w)
        CHECK(tr.w_cum[6][static_cast<std::size_t>(w)] == Catch::Approx(1.0).margin(1e-14));
    CHECK(tau.max_unit_variance_dev <= 1e-14);
    CHECK(tau.stopping_time_ok);

    for (int s = 0; s < 25; ++s) {
        const auto rc = random_finite_chain(6100 + static_cast<std::uint64_t>(s));
        const auto rt = martingale_decompose(rc);
        const auto rtau = stopping_time_tau(rt);
        CHECK(rtau.max_unit_variance_dev <= 1e-12);
        CHECK(rtau.stopping_time_ok);
        double total = 0.0;
        for (const auto& [t, p] : rtau.law) {
            CHECK(t >= 1);
            CHECK(t <= rc.n);
            total += p;
        }
        CHECK(total == Catch::Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("truncation split: boundary regimes and sweep") {
    const auto chain = testutil::product_chain(3);
    const auto tr = martingale_decompose(chain);

    // c above max |X|/sigma: nothing truncated
    const double c_hi = tr.max_abs_x / tr.sigma * 1.01;
    const auto hi = truncation_split(chain, c_hi);
    CHECK(hi.l_of_c == 0.0);
    CHECK(hi.var_trunc_tail == 0.0);
    CHECK(hi.sigma_c2 == Catch::Approx(1.0).margin(1e-14));
    CHECK(hi.var_bound_ok);
    CHECK(hi.sigma_bound_ok);

    // c below the smallest nonzero |X|/sigma: the kept part vanishes
    const auto lo = truncation_split(chain, 1e-6);
    CHECK(lo.sigma_c2 == 0.0);
    CHECK(lo.var_bound_ok);
    CHECK(lo.sigma_bound_ok);

    for (int s = 0; s < 50; ++s) {
        const auto rc = random_finite_chain(6200 + static_cast<std::uint64_t>(s));
        Xoshiro256pp rng(static_cast<std::uint64_t>(s));
        for (int j = 0; j < 5; ++j) {
            const double c = 0.01 * std::pow(1000.0, rng.uniform());
            const auto rep = truncation_split(rc, c);
            INFO("seed " << 6200 + s << " c=" << c);
            CHECK(rep.var_bound_ok);
            CHECK(rep.sigma_bound_ok);
        }
    }
}

TEST_CASE("mutation sensitivity: perturbed traces are detected") {
    const auto chain = random_finite_chain(31337);
    {
        // corrupt one Y value: the martingale identities must fail
        auto tr = martingale_decompose(chain);
        tr.y[1][0] += 1e-6;
        CHECK_FALSE(verify_identities(tr).ok(1e-12));
    }
    {
        // corrupt E(X_1 | F_0) and rebuild Y from it
        auto tr = martingale_decompose(chain);
        tr.cexp_x[1][0] += 1e-6;
        for (std::int64_t w = 0; w < tr.n_outcomes; ++w)
            tr.y[1][static_cast<std::size_t>(w)] =
                tr.x[1][static_cast<std::size_t>(w)] - tr.cexp_x[1][static_cast<std::size_t>(w)] +
                tr.cexp_x[2][static_cast<std::size_t>(w)];
        CHECK_FALSE(verify_identities(tr).ok(1e-12));
    }
    {
        // corrupt E(Y_1^2 | F_0): the unit conditional-variance identity fails
        auto tr = martingale_decompose(chain);
        for (auto& v : tr.cexp_y2[1]) v += 1e-6;
        CHECK(stopping_time_tau(tr).max_unit_variance_dev > 1e-12);
    }
}

TEST_CASE("chain validation and enumeration limits") {
    FiniteChain bad;
    bad.alphabet = {1.0};
    bad.weights = {1};
    bad.n = 1;
    bad.link = {{0.0}};
    CHECK_THROWS_AS(martingale_decompose(bad), invalid_spec_error);

    FiniteChain uncentered;
    uncentered.alphabet = {-1.0, 1.0};
    uncentered.weights = {1, 1};
    uncentered.n = 1;
    uncentered.link = {{0.5, 1.5, 0.5, 1.5}};
    CHECK_THROWS_AS(martingale_decompose(uncentered), invalid_spec_error);

    FiniteChain too_big;
    too_big.alphabet = {-1.0, -0.5, 0.5, 1.0};
    too_big.weights = {1, 1, 1, 1};
    too_big.n = 12;
    too_big.link.assign(12, std::vector<double>(16, 0.0));
    CHECK_THROWS_AS(martingale_decompose(too_big), enumeration_limit_error);

    FiniteChain n_too_large;
    n_too_large.alphabet = {-1.0, 1.0};
    n_too_large.weights = {1, 1};
    n_too_large.n = 13;
    n_too_large.link.assign(13, std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(martingale_decompose(n_too_large), invalid_spec_error);
}
