#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace mdclt {

using std::int64_t;
using std::uint64_t;

inline constexpr double kSqrt2 = 1.4142135623730951;

// Neumaier-compensated accumulator. Used wherever a sum must not depend on
// chunking or thread count beyond the fixed merge order.
class KahanSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    void merge(const KahanSum& other) {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

// Mean / standard-error pair for replicate-level Monte Carlo statistics.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    int64_t count = 0;
};

// Accumulates sum and sum of squares with compensation; SE is the usual
// sqrt(sample variance / k).
class MomentAccumulator {
public:
    void add(double v) {
        sum_.add(v);
        sumsq_.add(v * v);
        ++count_;
    }
    void merge(const MomentAccumulator& o) {
        sum_.merge(o.sum_);
        sumsq_.merge(o.sumsq_);
        count_ += o.count_;
    }
    int64_t count() const { return count_; }
    double mean() const { return count_ > 0 ? sum_.value() / static_cast<double>(count_) : 0.0; }
    double variance() const {
        if (count_ < 2) return 0.0;
        const double k = static_cast<double>(count_);
        const double m = mean();
        double v = (sumsq_.value() - k * m * m) / (k - 1.0);
        return v > 0.0 ? v : 0.0;
    }
    double std_err() const {
        return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
    }
    MeanSe result() const { return MeanSe{mean(), std_err(), count_}; }

private:
    KahanSum sum_;
    KahanSum sumsq_;
    int64_t count_ = 0;
};

} // namespace mdclt
