#pragma once

#include "momentda/common.hpp"

#include <string>
#include <vector>

namespace momentda {

/// k series of d features over t time steps, with the scenario parameters rho.
struct DomainSeries {
    std::vector<Matrix> series;  // k entries, each d x t
    Vector rho;

    Eigen::Index count() const { return static_cast<Eigen::Index>(series.size()); }
    Eigen::Index features() const { return series.empty() ? 0 : series.front().rows(); }
    Eigen::Index steps() const { return series.empty() ? 0 : series.front().cols(); }
    void validate() const;
};

/// One smoothed d x t mean curve per source domain.
struct MeanCurves {
    std::vector<Matrix> curves;
    std::vector<std::string> warnings;

    Eigen::Index domains() const { return static_cast<Eigen::Index>(curves.size()); }
    Eigen::Index features() const { return curves.empty() ? 0 : curves.front().rows(); }
    Eigen::Index steps() const { return curves.empty() ? 0 : curves.front().cols(); }
};

/// Penalized least squares: minimizes ||f - m||^2 + smooth * ||D2 f||^2, with D2
/// the second-difference operator, and evaluates back on the grid.
Vector smooth_curve(const Vector& values, double smooth);

/// Pointwise means over each domain's series, then smoothed per feature.
/// With fewer than four steps the raw means are returned with a warning.
MeanCurves fit_mean_curves(const std::vector<DomainSeries>& domains, double smooth);

/// Equidistant integer anchor indices (0-based) including the first and last step.
std::vector<Eigen::Index> equidistant_anchors(Eigen::Index steps, Eigen::Index count);

struct CorrectionConfig {
    Eigen::Index anchors = 0;  // 0 selects min(10, t)
    double alpha = 1.0;        // coupling of neighbouring anchors
    double beta = 0.01;        // l1 weight on the slopes
    double delta = 0.9;        // coupling decay, in (0, 1]
    int window = 2;            // u
    bool squared_data_term = false;
    int max_iter = 5000;
    double tol = 1e-7;         // on the gradient-map norm

    void validate() const;
};

/// Linear corrections Phi_j(rho) = theta_jᵀ rho + bias_j at the anchor steps.
struct CorrectionModel {
    std::vector<Eigen::Index> anchors;  // 0-based time indices
    std::vector<Matrix> theta;          // per anchor, z x d
    std::vector<Vector> bias;           // per anchor, length d
    CorrectionConfig config;
    Eigen::Index steps = 0;
    bool converged = false;
    int iterations = 0;
    double objective = 0.0;
    std::vector<double> objective_trace;

    Eigen::Index anchor_count() const { return static_cast<Eigen::Index>(anchors.size()); }
    Eigen::Index parameters() const { return theta.empty() ? 0 : theta.front().rows(); }
    Eigen::Index features() const { return bias.empty() ? 0 : bias.front().size(); }

    /// Phi_j(rho) for anchor j.
    Vector correction(Eigen::Index j, const Vector& rho) const;
    static CorrectionModel zeros(Eigen::Index steps, Eigen::Index anchors, Eigen::Index parameters,
                                 Eigen::Index features);
};

/// Value of the fitting objective for the given parameters and data.
double correction_objective(const CorrectionModel& model, const MeanCurves& curves, const std::vector<Vector>& rhos);

/// Proximal gradient with backtracking; the data-term kink uses subgradient 0.
/// Returns the best iterate; `converged` reports whether tol was reached.
CorrectionModel fit_corrections(const MeanCurves& curves, const std::vector<Vector>& rhos,
                                const CorrectionConfig& config);

/// Exponent index in the moving-average weights gamma^{(|R| - 2i + 2)/2}.
enum class PairWeighting {
    kRank,            // i = rank of the pair in the nesting, outermost first
    kAnchorPosition,  // i = 1-based anchor index of the pair's left element
};

struct SmoothingConfig {
    double gamma = 0.5;  // in (0, 1]
    int window = 2;      // u: pairs (a-k, c+k), k = u..0
    Eigen::Index feature = 0;
    PairWeighting weighting = PairWeighting::kRank;

    void validate() const;
};

/// Pair of anchor indices with its normalized weight.
struct WeightedPair {
    Eigen::Index left;
    Eigen::Index right;
    double weight;
};

/// Nested anchor pairs around time step v (0-based) with normalized weights.
/// Sets `clamped` when v lies outside the anchor hull.
std::vector<WeightedPair> smoothing_pairs(const std::vector<Eigen::Index>& anchors, double v,
                                          const SmoothingConfig& cfg, bool* clamped = nullptr);

/// Correction curve subtracted from the designated feature channel.
Vector correction_curve(const CorrectionModel& model, const Vector& rho, const SmoothingConfig& cfg,
                        std::vector<std::string>* warnings = nullptr);

/// Corrected series of the designated channel for one d x t series.
Vector transform(const Matrix& x, const Vector& rho, const CorrectionModel& model, const SmoothingConfig& cfg,
                 std::vector<std::string>* warnings = nullptr);

}  // namespace momentda
