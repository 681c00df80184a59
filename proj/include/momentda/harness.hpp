#pragma once

#include "momentda/common.hpp"
#include "momentda/mann.hpp"
#include "momentda/sample.hpp"
#include "momentda/scitsm.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace momentda {

// ---------------------------------------------------------------- generators

/// Three 2-D Gaussian blobs; the target copies the source law, rotated about
/// the source centroid and then translated.
struct ToyKnobs {
    double radius = 1.0;          // blob centres on a circle of this radius
    double spread = 0.25;         // per-coordinate blob standard deviation
    double rotation = 0.6;        // radians
    double shift_x = 0.5;
    double shift_y = -0.3;
};

struct ToyData {
    LabeledBatch source;
    Sample target;
    std::vector<int> source_classes;
    std::vector<int> target_classes;  // held aside, for evaluation only
};

ToyData gen_toy(std::uint64_t seed, Eigen::Index n_per_class, const ToyKnobs& knobs = {});

struct OverpenalizationData {
    Sample p;
    Sample q_left;
    Sample q_right;
};

/// p = 0.8 Beta(0.4, 0.4) + 0.1, qL = Normal(0.5, 0.27^2), qR = 0.8 Beta(0.4, 0.4) + 0.12.
/// With `coupled`, qR reuses the Beta draws of p (qR = p + 0.02 row by row) so
/// that the Monte Carlo error of the p-qR comparison cancels; the marginal law
/// of every sample is unchanged.
OverpenalizationData gen_overpenalization(std::uint64_t seed, Eigen::Index n, bool coupled = true);

/// Ground truth of the synthetic multi-domain series:
/// x_f(v) = (1 + scaleᵀ_f rho) base_f(v) + offsetᵀ_f rho + offset_bias_f + noise.
struct RhoMap {
    Matrix offset;       // z x d
    Vector offset_bias;  // d
    Matrix scale;        // z x d, zeros for a pure offset shift
    double noise = 0.1;

    static RhoMap linear_offset(Eigen::Index z, Eigen::Index d, double slope, double noise);
    Eigen::Index parameters() const { return offset.rows(); }
    Eigen::Index features() const { return offset.cols(); }
    void validate() const;
};

/// Smooth shared signal of feature f at time step v of t.
double base_signal(Eigen::Index f, Eigen::Index v, Eigen::Index t);

/// Domains with rho drawn uniformly from [0, 1]^z, or taken from `rhos` when given.
std::vector<DomainSeries> gen_multidomain_ts(std::uint64_t seed, Eigen::Index s_domains, Eigen::Index k,
                                             Eigen::Index d, Eigen::Index t, const RhoMap& map,
                                             const std::vector<Vector>* rhos = nullptr);

// ---------------------------------------------------------------- reports

struct Assertion {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Numeric table; booleans are stored as 0/1.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row);
};

/// Two-column numeric series written as a plot-ready CSV.
struct Plot {
    std::string x_label;
    std::string y_label;
    std::vector<std::pair<double, double>> points;
};

struct Report {
    static constexpr int kSchemaVersion = 1;

    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<Assertion> assertions;
    std::map<std::string, Table> tables;
    std::map<std::string, std::string> notes;
    std::map<std::string, Plot> plots;

    void check(const std::string& name, bool passed, const std::string& detail);
    bool passed() const;
    std::vector<std::string> failures() const;
    /// Deterministic JSON text; throws when a numeric cell is not finite.
    std::string to_json() const;
    /// Writes <dir>/<experiment>.json and <dir>/<experiment>_<plot>.csv; returns the JSON path.
    std::string write(const std::string& dir) const;
};

// ---------------------------------------------------------------- experiments

/// Rows of the bounds demonstration: a base maxent density against
/// perturbations of its natural parameter with the given relative sizes.
Report bounds_demo(std::uint64_t seed, int m, const std::vector<double>& grid);

/// Perturbation sizes used when none are given: 25 log-spaced values in [1e-4, 1].
std::vector<double> default_bounds_grid();

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 42;
    std::map<std::string, double> knobs;  // experiment-specific numeric settings
    std::string sweep_param;              // sweep: m | hidden | lambda
    std::vector<double> sweep_values;
    std::string output_dir;               // empty: no files written

    double knob(const std::string& name, double fallback) const;
};

const std::vector<std::string>& experiment_names();

/// Runs the named experiment; throws std::invalid_argument for an unknown name.
Report run(const ExperimentConfig& config);

/// Parses "a..b" (inclusive integer range) or a comma-separated list.
std::vector<double> parse_values(const std::string& text);

/// Lambda grid averaged over in the m sweep: 7 log-spaced values in [0.3, 3].
std::vector<double> sweep_lambda_grid();

}  // namespace momentda
