#pragma once

#include "momentda/common.hpp"

#include <cstdint>
#include <vector>

namespace momentda {

/// Counter-based generator: the i-th draw of stream s under seed k is
/// splitmix64_finalize(key(k, s) + i * 0x9E3779B97F4A7C15). Output depends only
/// on (seed, stream, counter), so results are identical on every platform and
/// independent streams can be derived without sharing state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (one variate per two uniforms).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    /// Uniform integer in [0, n) by rejection, n > 0.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<Eigen::Index> permutation(Eigen::Index n);

    /// A generator on a derived stream; the parent is left untouched.
    CounterRng fork(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Inverse-CDF sampler for Beta(a, b) backed by a tabulated CDF. The CDF is
/// integrated after the substitution u = x^a (and its mirror on the upper half),
/// which removes the endpoint singularities for shape parameters below one.
class BetaSampler {
public:
    BetaSampler(double a, double b, int table_size = 8192);

    double cdf(double x) const;
    double quantile(double p) const;
    double sample(CounterRng& rng) const { return quantile(rng.uniform()); }

private:
    double a_, b_;
    double lower_mass_;             // F(1/2)
    std::vector<double> lower_u_;   // u = x^a on [0, 2^-a]
    std::vector<double> lower_cdf_;
    std::vector<double> upper_u_;   // u = (1-x)^b on [0, 2^-b]
    std::vector<double> upper_tail_;  // 1 - F(1 - u^{1/b})
};

}  // namespace momentda
