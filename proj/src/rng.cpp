#include "momentda/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace momentda {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL + 1))) {}

std::uint64_t CounterRng::next_u64() { return mix64(key_ + (++counter_) * kGolden); }

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

std::vector<Eigen::Index> CounterRng::permutation(Eigen::Index n) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(below(static_cast<std::uint64_t>(i + 1)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
}

CounterRng CounterRng::fork(std::uint64_t stream) const {
    return CounterRng(seed_, stream_ * 1000003ULL + stream + 1);
}

namespace {

// Cumulative integral of (1 - u^{1/a})^{b-1} / a over an even grid on [0, 2^-a],
// i.e. the unnormalized Beta(a, b) CDF on [0, 1/2] in the variable u = x^a.
void tabulate_half(double a, double b, int n, std::vector<double>& u, std::vector<double>& cum) {
    const double top = std::pow(0.5, a);
    const double h = top / n;
    auto f = [&](double uu) { return std::pow(1.0 - std::pow(uu, 1.0 / a), b - 1.0) / a; };
    u.resize(static_cast<std::size_t>(n) + 1);
    cum.assign(static_cast<std::size_t>(n) + 1, 0.0);
    u[0] = 0.0;
    for (int k = 1; k <= n; ++k) {
        u[static_cast<std::size_t>(k)] = k * h;
        // Simpson on each cell using its midpoint.
        const double lo = (k - 1) * h, hi = k * h;
        cum[static_cast<std::size_t>(k)] =
            cum[static_cast<std::size_t>(k) - 1] + h / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    }
}

double interp_inverse(const std::vector<double>& u, const std::vector<double>& cum, double p) {
    auto it = std::lower_bound(cum.begin(), cum.end(), p);
    if (it == cum.begin()) return u.front();
    if (it == cum.end()) return u.back();
    const auto k = static_cast<std::size_t>(it - cum.begin());
    const double span = cum[k] - cum[k - 1];
    const double frac = span > 0.0 ? (p - cum[k - 1]) / span : 0.0;
    return u[k - 1] + frac * (u[k] - u[k - 1]);
}

double interp_forward(const std::vector<double>& u, const std::vector<double>& cum, double uu) {
    auto it = std::lower_bound(u.begin(), u.end(), uu);
    if (it == u.begin()) return cum.front();
    if (it == u.end()) return cum.back();
    const auto k = static_cast<std::size_t>(it - u.begin());
    const double frac = (uu - u[k - 1]) / (u[k] - u[k - 1]);
    return cum[k - 1] + frac * (cum[k] - cum[k - 1]);
}

}  // namespace

BetaSampler::BetaSampler(double a, double b, int table_size) : a_(a), b_(b) {
    require(a > 0.0 && b > 0.0, "Beta shape parameters must be positive");
    require(table_size >= 16, "Beta table too small");
    std::vector<double> lower, upper;
    tabulate_half(a, b, table_size, lower_u_, lower);
    tabulate_half(b, a, table_size, upper_u_, upper);
    const double total = lower.back() + upper.back();
    lower_cdf_.resize(lower.size());
    upper_tail_.resize(upper.size());
    for (std::size_t k = 0; k < lower.size(); ++k) lower_cdf_[k] = lower[k] / total;
    for (std::size_t k = 0; k < upper.size(); ++k) upper_tail_[k] = upper[k] / total;
    lower_mass_ = lower_cdf_.back();
}

double BetaSampler::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x <= 0.5) return interp_forward(lower_u_, lower_cdf_, std::pow(x, a_));
    return 1.0 - interp_forward(upper_u_, upper_tail_, std::pow(1.0 - x, b_));
}

double BetaSampler::quantile(double p) const {
    require(p >= 0.0 && p <= 1.0, "quantile probability outside [0, 1]");
    if (p <= lower_mass_) return std::pow(interp_inverse(lower_u_, lower_cdf_, p), 1.0 / a_);
    return 1.0 - std::pow(interp_inverse(upper_u_, upper_tail_, 1.0 - p), 1.0 / b_);
}

}  // namespace momentda
