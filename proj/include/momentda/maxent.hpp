#pragma once

#include "momentda/common.hpp"
#include "momentda/sample.hpp"

#include <array>
#include <functional>
#include <vector>

namespace momentda {

/// Gauss-Legendre nodes and weights mapped to [0, 1]; weights sum to one.
class QuadratureGrid {
public:
    static constexpr int kDefaultNodes = 256;

    explicit QuadratureGrid(int nodes = kDefaultNodes);

    const Vector& nodes() const { return nodes_; }
    const Vector& weights() const { return weights_; }
    int size() const { return static_cast<int>(nodes_.size()); }

    template <typename F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (Eigen::Index k = 0; k < nodes_.size(); ++k) s += weights_(k) * f(nodes_(k));
        return s;
    }

private:
    Vector nodes_;
    Vector weights_;
};

/// Orthonormal shifted Legendre polynomials eta_1..eta_m on [0, 1], m <= 5.
class LegendreBasis {
public:
    static constexpr int kMaxOrder = 5;

    explicit LegendreBasis(int order);

    int order() const { return order_; }
    /// eta_j(x) for 1 <= j <= order; x must lie in [0, 1].
    double eval(int j, double x) const;
    /// (eta_1(x), ..., eta_m(x)).
    Vector eval_all(double x) const;
    /// Ascending power coefficients of eta_j.
    const std::vector<double>& coefficients(int j) const;

private:
    int order_;
    std::array<std::vector<double>, kMaxOrder> coeffs_;
};

Vector empirical_legendre_moments(const Sample& x, const LegendreBasis& basis);

/// Density c(lambda) exp(-<lambda, phi(x)>) on [0, 1]. log_norm is log(1 / c(lambda)).
class MaxEntModel {
public:
    /// Normalizes the family member with natural parameter lambda on the grid.
    static MaxEntModel from_lambda(const LegendreBasis& basis, Vector lambda, const QuadratureGrid& grid);

    const LegendreBasis& basis() const { return basis_; }
    const Vector& lambda() const { return lambda_; }
    double log_norm() const { return log_norm_; }

    double density(double x) const;
    double log_density(double x) const;
    /// Expected basis values under the model, by quadrature.
    Vector moments(const QuadratureGrid& grid) const;

private:
    MaxEntModel(LegendreBasis basis, Vector lambda, double log_norm)
        : basis_(std::move(basis)), lambda_(std::move(lambda)), log_norm_(log_norm) {}

    LegendreBasis basis_;
    Vector lambda_;
    double log_norm_;
};

struct MaxEntFitOptions {
    double tol = 1e-9;          // on the l-infinity norm of the dual gradient
    int max_iter = 100;
    double armijo = 1e-4;
    int max_halvings = 40;
};

/// Per-iteration record of the dual objective at accepted iterates.
struct MaxEntFitTrace {
    std::vector<double> objective;
    std::vector<double> gradient_norm;
};

/// Minimizes the dual <lambda, mu> - log c(lambda) by damped Newton steps with
/// quadrature-evaluated gradient (mu - E_q[phi]) and Hessian (Cov_q[phi]).
/// Throws ConvergenceError when the tolerance is not met within max_iter.
MaxEntModel fit_maxent(const Vector& mu, const LegendreBasis& basis, const QuadratureGrid& grid,
                       const MaxEntFitOptions& options = {}, MaxEntFitTrace* trace = nullptr);

using DensityFn = std::function<double(double)>;

/// -integral p log p.
double entropy(const DensityFn& p, const QuadratureGrid& grid);
double entropy(const MaxEntModel& model, const QuadratureGrid& grid);
/// integral p log(p / q); both densities must be positive at every node.
double kl(const DensityFn& p, const DensityFn& q, const QuadratureGrid& grid);
/// integral |p - q|.
double l1(const DensityFn& p, const DensityFn& q, const QuadratureGrid& grid);

/// Moments integral phi p for an arbitrary density.
Vector density_moments(const DensityFn& p, const LegendreBasis& basis, const QuadratureGrid& grid);

}  // namespace momentda
