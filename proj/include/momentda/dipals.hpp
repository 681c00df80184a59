#pragma once

#include "momentda/common.hpp"
#include "momentda/sample.hpp"

#include <string>
#include <vector>

namespace momentda {

enum class GammaMode { kFixed, kHeuristic, kZero };

/// How each latent direction is computed from (S, y, Lambda, gamma).
enum class DirectionRule {
    /// Normalized (yᵀS / yᵀy)(I + gamma/yᵀy Lambda)^{-1}.
    kClosedForm,
    /// Exact minimizer of ||S - y wᵀ||_F^2 + gamma wᵀ Lambda w over the unit sphere.
    kSphereConstrained,
};

struct DiplsConfig {
    int n_components = 1;
    GammaMode gamma_mode = GammaMode::kZero;
    double gamma = 0.0;  // used when gamma_mode == kFixed
    DirectionRule rule = DirectionRule::kClosedForm;

    /// Parses "heuristic", "0" or a nonnegative number.
    static DiplsConfig parse_gamma(int components, const std::string& gamma);
    void validate(Eigen::Index d) const;
};

/// Per-component bookkeeping recorded during the fit.
struct DiplsComponent {
    double gamma = 0.0;
    bool gamma_warning = false;        // heuristic denominator vanished
    double variance_difference = 0.0;  // wᵀ(Cov_S - Cov_T)w on the deflated data
    double regularizer = 0.0;          // wᵀ Lambda w
    double target_loading_denominator = 0.0;  // t_pᵀ t_q (t_qᵀ t_q for unequal domain sizes)
    double source_norm = 0.0;          // ||S_i||_F after deflation
};

struct DiplsModel {
    Matrix weights;   // W, d x s
    Matrix loadings;  // P, d x s
    Vector inner;     // c
    Vector coef;      // b
    Vector x_mean_source;
    Vector x_mean_target;
    double y_mean = 0.0;

    Matrix source_scores;  // columns t_p^(i), training diagnostics
    std::vector<DiplsComponent> components;
    std::vector<std::string> warnings;
};

/// |.| applied to the eigenvalues of Cov(Sp) - Cov(Sq) (each centered, divisor n - 1).
Matrix lambda_matrix(const Sample& sp, const Sample& sq);
Matrix lambda_matrix(const Matrix& sp, const Matrix& sq);

/// Unit latent direction. Throws std::invalid_argument for yᵀy = 0 and
/// IllConditionedError when cond(I + gamma/yᵀy Lambda) exceeds 1e12.
Vector direction(const Matrix& s, const Vector& y, const Matrix& lambda, double gamma,
                 DirectionRule rule = DirectionRule::kClosedForm);

/// Value of ||S - y wᵀ||_F^2 + gamma wᵀ Lambda w.
double direction_objective(const Matrix& s, const Vector& y, const Matrix& lambda, double gamma, const Vector& w);

struct GammaHeuristic {
    double gamma = 0.0;
    bool warning = false;
};

/// ||S - y w0ᵀ||_F^2 / (w0ᵀ Lambda w0) with w0 the unregularized direction;
/// a vanishing denominator yields gamma = 0 with the warning flag set.
GammaHeuristic gamma_heuristic(const Matrix& s, const Vector& y, const Matrix& lambda);

DiplsModel fit(const Sample& xp, const Vector& y, const Sample& xq, const DiplsConfig& config);

Vector predict(const DiplsModel& model, const Sample& x);

double rmse(const Vector& a, const Vector& b);

}  // namespace momentda
