#pragma once

#include "momentda/common.hpp"
#include "momentda/sample.hpp"

#include <string>
#include <vector>

namespace momentda {

/// Default number of central moments used wherever an order is not given.
inline constexpr int kDefaultCmdOrder = 5;

/// Mean vector plus coordinate-wise central moments of orders 2..m.
struct MomentSummary {
    int order = 0;
    Vector mean;
    std::vector<Vector> central;  // central[j - 2] holds order j
};

/// Nonnegative weights a_1..a_m of the CMD terms.
class CmdWeights {
public:
    explicit CmdWeights(Vector a);
    static CmdWeights ones(int m);

    const Vector& values() const { return a_; }
    int order() const { return static_cast<int>(a_.size()); }
    double operator[](int j) const { return a_(j); }

private:
    Vector a_;
};

/// Which degree-2 monomials enter the second CMD term.
enum class MonomialMode {
    kMarginal,        // (x_1^j, ..., x_d^j) for every order
    kCrossSecondOrder // order 2 uses all x_i x_k, i <= k; higher orders stay marginal
};

struct KernelSpec {
    enum class Kind { kLinear, kPolynomial, kGaussian };

    Kind kind = Kind::kLinear;
    int degree = 2;
    double bias = 1.0;
    double bandwidth = 1.0;

    static KernelSpec linear() { return {}; }
    static KernelSpec polynomial(int degree, double bias = 1.0);
    static KernelSpec gaussian(double sigma);
    /// Parses "linear", "poly:<degree>[:<bias>]" or "gauss:<sigma>".
    static KernelSpec parse(const std::string& text);

    double operator()(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y) const;
    std::string describe() const;
};

MomentSummary central_moments(const Sample& x, int m, MonomialMode mode = MonomialMode::kMarginal);

/// The weighted per-order distances a_j * ||c_j(p) - c_j(q)||_2, j = 1..m.
std::vector<double> cmd_terms(const Sample& xp, const Sample& xq, int m, const CmdWeights& weights,
                              MonomialMode mode = MonomialMode::kMarginal);

/// Central moment discrepancy between two samples (biased plug-in moments).
double cmd(const Sample& xp, const Sample& xq, int m, const CmdWeights& weights,
           MonomialMode mode = MonomialMode::kMarginal);

/// a_j = |b - a|^{-j}, which keeps every term bounded for data in [a, b]^d.
CmdWeights default_weights(double a, double b, int m);

/// 2 sqrt(d) (1/(j+1) (j/(j+1))^j + 2^{-(1+j)}): bound on the j-th weighted term
/// under default_weights.
double cmd_term_bound(int j, int d);

/// Biased V-statistic estimate of squared MMD. Linear and polynomial kernels
/// (bias >= 0) are evaluated through their finite feature maps, which gives the
/// same value in O(n) time.
double mmd_squared(const Sample& xp, const Sample& xq, const KernelSpec& kernel);

/// Frobenius norm of the difference of the sample covariances (divisor n - 1).
double coral(const Sample& xp, const Sample& xq);

/// l1 distance between stacked raw marginal moments E[x_i^j], i <= d, j <= m.
double l1_moment_distance(const Sample& xp, const Sample& xq, int m);

}  // namespace momentda
