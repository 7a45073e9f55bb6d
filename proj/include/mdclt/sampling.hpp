#pragma once

// Row generation and batch plumbing. A row is a pure function of its derived
// seed, so parallel generation over replicates is reproducible bit-for-bit
// regardless of scheduling.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mdclt/array_spec.hpp"
#include "mdclt/common.hpp"
#include "mdclt/parallel.hpp"
#include "mdclt/rng.hpp"

namespace mdclt {

struct SampleBatch {
    std::int64_t k = 0;  // replicates (rows)
    std::int64_t n = 0;  // coordinates per row
    std::uint64_t seed_root = 0;
    std::vector<std::uint64_t> replicate_seeds;
    std::vector<double> data;  // row-major k x n

    std::span<const double> row(std::int64_t i) const {
        return {data.data() + i * n, static_cast<std::size_t>(n)};
    }
    std::span<double> row(std::int64_t i) {
        return {data.data() + i * n, static_cast<std::size_t>(n)};
    }
};

// Generates rows for one spec; owns the innovation scratch buffer.
class RowSampler {
public:
    explicit RowSampler(const ArraySpec& spec) : spec_(&spec) {
        if (const auto* mw = std::get_if<MovingWindowFamily>(&spec.family)) {
            scratch_.resize(static_cast<std::size_t>(spec.n_vars + mw->weights.size() - 1));
        } else if (const auto* ht = std::get_if<HeavyTailFamily>(&spec.family)) {
            scratch_.resize(static_cast<std::size_t>(ht->m) * ht->t + 1);
        } else if (const auto* ts = std::get_if<TwoScaleFamily>(&spec.family)) {
            scratch_.resize(static_cast<std::size_t>(ts->n) + 1);  // T_0..T_n
        }
    }

    void generate(std::uint64_t row_seed, std::span<double> out) {
        Xoshiro256pp rng(row_seed);
        const ArraySpec& spec = *spec_;
        if (const auto* mw = std::get_if<MovingWindowFamily>(&spec.family)) {
            const auto& w = mw->weights;
            for (auto& e : scratch_) e = mw->innovation.sample(rng);
            for (std::int64_t i = 0; i < spec.n_vars; ++i) {
                double x = 0.0;
                for (std::size_t j = 0; j < w.size(); ++j)
                    x += w[j] * scratch_[static_cast<std::size_t>(i) + j];
                out[static_cast<std::size_t>(i)] = x;
            }
        } else if (const auto* ht = std::get_if<HeavyTailFamily>(&spec.family)) {
            const auto heavy = [&rng] {
                return rng.sign() / std::cbrt(rng.uniform());
            };
            const std::int64_t head = static_cast<std::int64_t>(ht->m) * ht->t;
            for (std::int64_t i = 0; i < head; ++i) out[static_cast<std::size_t>(i)] = heavy();
            const double shared = heavy();
            for (std::int64_t i = head; i < spec.n_vars; ++i) out[static_cast<std::size_t>(i)] = shared;
        } else if (const auto* ts = std::get_if<TwoScaleFamily>(&spec.family)) {
            const double nd = static_cast<double>(ts->n);
            const double s = std::pow(nd, -0.5);
            const double r = std::pow(nd, -ts->alpha);
            for (auto& t : scratch_) t = rng.sign();  // T_0..T_n
            for (std::int64_t i = 0; i < spec.n_vars; ++i) {
                const double v = rng.sign() * (1.0 - ts->a * rng.uniform());
                out[static_cast<std::size_t>(i)] =
                    s * v + r * (scratch_[static_cast<std::size_t>(i) + 1] - scratch_[static_cast<std::size_t>(i)]);
            }
        }
    }

private:
    const ArraySpec* spec_;
    std::vector<double> scratch_;
};

// k independent realizations, deterministic in seed_root.
inline SampleBatch sample_row(const ArraySpec& spec, std::int64_t k, std::uint64_t seed_root) {
    SampleBatch batch;
    batch.k = k;
    batch.n = spec.n_vars;
    batch.seed_root = seed_root;
    batch.replicate_seeds.resize(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i)
        batch.replicate_seeds[static_cast<std::size_t>(i)] =
            derive_replicate_seed(seed_root, static_cast<std::uint64_t>(i));
    batch.data.resize(static_cast<std::size_t>(k * spec.n_vars));
    parallel_chunks(k, kDefaultChunk, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        RowSampler sampler(spec);
        for (std::int64_t i = lo; i < hi; ++i)
            sampler.generate(batch.replicate_seeds[static_cast<std::size_t>(i)], batch.row(i));
    });
    return batch;
}

// Streaming deterministic reduction over rows without materializing a batch.
// Visit must be callable as visit(state, replicate_index, row_span) and is
// invoked in replicate order within each fixed-size chunk.
template <class State, class Visit>
State reduce_rows(const ArraySpec& spec, std::int64_t k, std::uint64_t seed_root,
                  const Visit& visit) {
    const std::int64_t n_chunks = (k + kDefaultChunk - 1) / kDefaultChunk;
    std::vector<State> states(static_cast<std::size_t>(std::max<std::int64_t>(n_chunks, 0)));
    parallel_chunks(k, kDefaultChunk, [&](std::int64_t ci, std::int64_t lo, std::int64_t hi) {
        RowSampler sampler(spec);
        std::vector<double> row(static_cast<std::size_t>(spec.n_vars));
        State& st = states[static_cast<std::size_t>(ci)];
        for (std::int64_t i = lo; i < hi; ++i) {
            sampler.generate(derive_replicate_seed(seed_root, static_cast<std::uint64_t>(i)), row);
            visit(st, i, std::span<const double>(row));
        }
    });
    State total{};
    for (auto& st : states) total.merge(st);
    return total;
}

// Standardized sums S/sigma for k replicates.
inline std::vector<double> sample_standardized_sums(const ArraySpec& spec, std::int64_t k,
                                                    std::uint64_t seed_root, double sigma) {
    std::vector<double> sums(static_cast<std::size_t>(k));
    parallel_chunks(k, kDefaultChunk, [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
        RowSampler sampler(spec);
        std::vector<double> row(static_cast<std::size_t>(spec.n_vars));
        for (std::int64_t i = lo; i < hi; ++i) {
            sampler.generate(derive_replicate_seed(seed_root, static_cast<std::uint64_t>(i)), row);
            sums[static_cast<std::size_t>(i)] = kahan_total(row) / sigma;
        }
    });
    return sums;
}

// Block sums: M = ceil(N/m) columns, coordinates past N padded with zero.
// Row sums are preserved exactly (same summation order).
struct BlockedBatch {
    std::int64_t k = 0;
    std::int64_t m_cols = 0;  // M
    int m = 1;
    std::int64_t n = 0;  // source N
    std::vector<double> data;

    std::span<const double> row(std::int64_t i) const {
        return {data.data() + i * m_cols, static_cast<std::size_t>(m_cols)};
    }
};

inline void block_sums_row(std::span<const double> row, int m, std::span<double> out) {
    const std::int64_t n = static_cast<std::int64_t>(row.size());
    const std::int64_t n_blocks = (n + m - 1) / m;
    for (std::int64_t b = 0; b < n_blocks; ++b) {
        const std::int64_t lo = b * m;
        const std::int64_t hi = std::min<std::int64_t>(lo + m, n);
        double acc = 0.0;
        for (std::int64_t j = lo; j < hi; ++j) acc += row[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(b)] = acc;
    }
}

inline BlockedBatch block_sums(const SampleBatch& batch, int m) {
    if (m < 1) throw invalid_spec_error("block_sums: m must be >= 1");
    BlockedBatch out;
    out.k = batch.k;
    out.m = m;
    out.n = batch.n;
    out.m_cols = (batch.n + m - 1) / m;
    out.data.resize(static_cast<std::size_t>(out.k * out.m_cols));
    for (std::int64_t i = 0; i < batch.k; ++i)
        block_sums_row(batch.row(i), m,
                       {out.data.data() + i * out.m_cols, static_cast<std::size_t>(out.m_cols)});
    return out;
}

// Monte Carlo estimate of sigma^2 = Var(S) with standard error.
inline MeanSe estimate_sigma2(const ArraySpec& spec, std::int64_t k, std::uint64_t seed_root) {
    struct State {
        MomentAccumulator s2;
        void merge(const State& o) { s2.merge(o.s2); }
    };
    auto st = reduce_rows<State>(spec, k, seed_root,
                                 [](State& s, std::int64_t, std::span<const double> row) {
                                     const double sum = kahan_total(row);
                                     s.s2.add(sum * sum);
                                 });
    return st.s2.result();  // E S^2 (mean zero by construction)
}

} // namespace mdclt
