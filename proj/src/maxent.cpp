#include "momentda/maxent.hpp"
#include "momentda/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace momentda {

QuadratureGrid::QuadratureGrid(int n) {
    require(n >= 2, "quadrature needs at least two nodes");
    nodes_.resize(n);
    weights_.resize(n);
    // Roots of P_n by Newton's method; the grid is symmetric so solve half.
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        // Map [-1, 1] to [0, 1]; ascending node order.
        nodes_(i) = 0.5 * (1.0 - z);
        nodes_(n - 1 - i) = 0.5 * (1.0 + z);
        weights_(i) = 0.5 * w;
        weights_(n - 1 - i) = 0.5 * w;
    }
}

LegendreBasis::LegendreBasis(int order) : order_(order) {
    require(order >= 1 && order <= kMaxOrder, "Legendre basis order must be in [1, 5]");
    const double r3 = std::sqrt(3.0), r5 = std::sqrt(5.0), r7 = std::sqrt(7.0), r11 = std::sqrt(11.0);
    coeffs_[0] = {-r3, 2.0 * r3};
    coeffs_[1] = {r5, -6.0 * r5, 6.0 * r5};
    coeffs_[2] = {-r7, 12.0 * r7, -30.0 * r7, 20.0 * r7};
    coeffs_[3] = {3.0, -60.0, 270.0, -420.0, 210.0};
    coeffs_[4] = {-r11, 30.0 * r11, -210.0 * r11, 560.0 * r11, -630.0 * r11, 252.0 * r11};
}

const std::vector<double>& LegendreBasis::coefficients(int j) const {
    require(j >= 1 && j <= order_, "Legendre index out of range");
    return coeffs_[static_cast<std::size_t>(j - 1)];
}

double LegendreBasis::eval(int j, double x) const {
    require(j >= 1 && j <= order_, "Legendre index out of range");
    require(x >= 0.0 && x <= 1.0, "Legendre argument outside [0, 1]");
    const auto& c = coeffs_[static_cast<std::size_t>(j - 1)];
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
}

Vector LegendreBasis::eval_all(double x) const {
    Vector v(order_);
    for (int j = 1; j <= order_; ++j) v(j - 1) = eval(j, x);
    return v;
}

Vector empirical_legendre_moments(const Sample& x, const LegendreBasis& basis) {
    require(x.cols() == 1, "Legendre moments need a one-column sample");
    const auto& d = x.data();
    require((d.array() >= 0.0).all() && (d.array() <= 1.0).all(),
            "sample values must lie in [0, 1]; min-max normalize first");
    Vector mu = Vector::Zero(basis.order());
    for (Eigen::Index i = 0; i < d.rows(); ++i) mu += basis.eval_all(d(i, 0));
    return mu / static_cast<double>(d.rows());
}

namespace {

// Basis values at the quadrature nodes, one row per node.
Matrix basis_table(const LegendreBasis& basis, const QuadratureGrid& grid) {
    Matrix phi(grid.size(), basis.order());
    for (int k = 0; k < grid.size(); ++k) phi.row(k) = basis.eval_all(grid.nodes()(k)).transpose();
    return phi;
}

// log of integral exp(-<lambda, phi>) and the normalized quadrature masses.
double log_partition(const Matrix& phi, const Vector& lambda, const QuadratureGrid& grid, Vector* masses) {
    const Vector expo = -(phi * lambda);
    const double peak = expo.maxCoeff();
    const Vector scaled = (expo.array() - peak).exp().matrix().cwiseProduct(grid.weights());
    const double total = scaled.sum();
    if (masses) *masses = scaled / total;
    return peak + std::log(total);
}

}  // namespace

MaxEntModel MaxEntModel::from_lambda(const LegendreBasis& basis, Vector lambda, const QuadratureGrid& grid) {
    require(lambda.size() == basis.order(), "lambda length must equal the basis order");
    require(lambda.allFinite(), "lambda must be finite");
    const double log_norm = log_partition(basis_table(basis, grid), lambda, grid, nullptr);
    return MaxEntModel(basis, std::move(lambda), log_norm);
}

double MaxEntModel::log_density(double x) const {
    require(x >= 0.0 && x <= 1.0, "density argument outside [0, 1]");
    return -lambda_.dot(basis_.eval_all(x)) - log_norm_;
}

double MaxEntModel::density(double x) const { return std::exp(log_density(x)); }

Vector MaxEntModel::moments(const QuadratureGrid& grid) const {
    Vector mu = Vector::Zero(basis_.order());
    for (int k = 0; k < grid.size(); ++k) {
        const double x = grid.nodes()(k);
        mu += grid.weights()(k) * density(x) * basis_.eval_all(x);
    }
    return mu;
}

MaxEntModel fit_maxent(const Vector& mu, const LegendreBasis& basis, const QuadratureGrid& grid,
                       const MaxEntFitOptions& options, MaxEntFitTrace* trace) {
    require(mu.size() == basis.order(), "moment vector length must equal the basis order");
    require(mu.allFinite(), "moment vector must be finite");
    require(options.tol > 0.0, "tolerance must be positive");
    require(options.max_iter >= 1, "max_iter must be positive");

    const Matrix phi = basis_table(basis, grid);
    Vector lambda = Vector::Zero(basis.order());
    Vector masses;
    double log_z = log_partition(phi, lambda, grid, &masses);
    double objective = lambda.dot(mu) + log_z;

    double grad_norm = 0.0;
    for (int iter = 0; iter <= options.max_iter; ++iter) {
        const Vector expected = phi.transpose() * masses;
        const Vector grad = mu - expected;
        grad_norm = grad.lpNorm<Eigen::Infinity>();
        if (trace) {
            trace->objective.push_back(objective);
            trace->gradient_norm.push_back(grad_norm);
        }
        if (grad_norm <= options.tol) return MaxEntModel::from_lambda(basis, lambda, grid);
        if (iter == options.max_iter) break;

        const Matrix centered = phi.rowwise() - expected.transpose();
        const Matrix hessian = centered.transpose() * masses.asDiagonal() * centered;
        const Vector step = -hessian.ldlt().solve(grad);
        const double slope = grad.dot(step);
        if (!step.allFinite() || slope >= 0.0)
            throw ConvergenceError("maxent Newton step is not a descent direction", grad_norm);

        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
            const Vector trial = lambda + t * step;
            Vector trial_masses;
            const double trial_log_z = log_partition(phi, trial, grid, &trial_masses);
            const double trial_objective = trial.dot(mu) + trial_log_z;
            // Near the optimum the predicted decrease drops below the rounding
            // error of the objective; the Newton step is then judged by the gradient.
            const bool roundoff = -slope <= 1e-13 * (1.0 + std::abs(objective));
            const bool descent = roundoff ? h == 0 && (mu - phi.transpose() * trial_masses)
                                                          .lpNorm<Eigen::Infinity>() < grad_norm
                                          : trial_objective <= objective + options.armijo * t * slope;
            if (std::isfinite(trial_objective) && descent) {
                lambda = trial;
                masses = std::move(trial_masses);
                objective = trial_objective;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw ConvergenceError("maxent line search failed; moments may lie outside the moment set",
                                              grad_norm);
    }
    throw ConvergenceError("maxent fit did not converge in " + std::to_string(options.max_iter) +
                               " iterations (gradient norm " + format_double(grad_norm) + ")",
                           grad_norm);
}

double entropy(const DensityFn& p, const QuadratureGrid& grid) {
    return -grid.integrate([&](double x) {
        const double v = p(x);
        return v > 0.0 ? v * std::log(v) : 0.0;
    });
}

double entropy(const MaxEntModel& model, const QuadratureGrid& grid) {
    return -grid.integrate([&](double x) { return model.density(x) * model.log_density(x); });
}

double kl(const DensityFn& p, const DensityFn& q, const QuadratureGrid& grid) {
    return grid.integrate([&](double x) {
        const double a = p(x), b = q(x);
        require(a > 0.0 && b > 0.0, "kl needs strictly positive densities at every quadrature node");
        return a * std::log(a / b);
    });
}

double l1(const DensityFn& p, const DensityFn& q, const QuadratureGrid& grid) {
    return grid.integrate([&](double x) { return std::abs(p(x) - q(x)); });
}

Vector density_moments(const DensityFn& p, const LegendreBasis& basis, const QuadratureGrid& grid) {
    Vector mu = Vector::Zero(basis.order());
    for (int k = 0; k < grid.size(); ++k) {
        const double x = grid.nodes()(k);
        mu += grid.weights()(k) * p(x) * basis.eval_all(x);
    }
    return mu;
}

}  // namespace momentda
