// Acceptance gate: one PASS/FAIL line per criterion; exits nonzero if any fails.

#include "momentda/dipals.hpp"
#include "momentda/harness.hpp"
#include "momentda/linalg.hpp"
#include "momentda/mann.hpp"
#include "momentda/maxent.hpp"
#include "momentda/moment_metrics.hpp"
#include "momentda/rng.hpp"
#include "momentda/scitsm.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace momentda;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- tolerances

constexpr double kOverpenalizationN = 1e6;
constexpr double kCmdLeftLo = 0.015, kCmdLeftHi = 0.03;
constexpr double kMmdRightLo = 0.0008, kMmdRightHi = 0.0016;
constexpr double kOverpenalizationSeconds = 60.0;

constexpr double kSymmetryTol = 1e-12;
constexpr double kTriangleTol = 1e-12;
constexpr int kTriples = 100;

constexpr double kBoundTol = 1e-10;
constexpr int kBoundPairs = 50;
constexpr int kBoundOrders = 7;

constexpr double kGradientRelTol = 1e-5;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr int kGradientInstances = 50;
constexpr double kGradientSeconds = 30.0;

constexpr double kToyMinGain = 0.05;
constexpr double kToyMinSourceAccuracy = 0.95;
constexpr double kToySeconds = 120.0;

constexpr double kNipalsTol = 1e-8;
constexpr double kSphereTol = 1e-4;
constexpr int kSphereInstances = 20;
constexpr int kRegularizerVectors = 200;
constexpr double kRegularizerTol = 1e-10;

constexpr double kUniformLambdaTol = 1e-10;
constexpr double kMomentMatchTol = 1e-6;
constexpr double kKlIdentityTol = 1e-6;
constexpr int kPinskerPairs = 20;
constexpr double kPinskerSlack = 1e-8;

constexpr double kAlignmentSigmas = 3.0;

constexpr std::uint64_t kSeed = 42;

// ---------------------------------------------------------------- helpers

struct Outcome {
    bool passed = true;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

Matrix uniform(CounterRng& rng, Eigen::Index r, Eigen::Index c, double lo = 0.0, double hi = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

Matrix gaussian(CounterRng& rng, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = sd * rng.normal();
    return m;
}

double relative_error(const Vector& a, const Vector& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

// ---------------------------------------------------------------- 1

Outcome overpenalization() {
    const auto data = gen_overpenalization(kSeed, static_cast<Eigen::Index>(kOverpenalizationN));
    const CmdWeights ones = CmdWeights::ones(4);
    const KernelSpec poly = KernelSpec::polynomial(2, 1.0);
    const double cmd_l = cmd(data.p, data.q_left, 4, ones), cmd_r = cmd(data.p, data.q_right, 4, ones);
    const double mmd_l = mmd_squared(data.p, data.q_left, poly), mmd_r = mmd_squared(data.p, data.q_right, poly);
    Outcome o;
    o.passed = cmd_l > cmd_r && mmd_l < mmd_r && cmd_l >= kCmdLeftLo && cmd_l <= kCmdLeftHi && mmd_r >= kMmdRightLo &&
               mmd_r <= kMmdRightHi;
    o.detail = "cmd4 L=" + num(cmd_l) + " R=" + num(cmd_r) + ", mmd2 L=" + num(mmd_l) + " R=" + num(mmd_r);
    return o;
}

// ---------------------------------------------------------------- 2

Outcome cmd_axioms() {
    CounterRng rng = CounterRng(kSeed).fork(2);
    const auto w = CmdWeights::ones(5);
    double worst_sym = 0.0, worst_tri = -1e300, worst_id = 0.0;
    for (int i = 0; i < kTriples; ++i) {
        const auto rows = [&] { return static_cast<Eigen::Index>(5 + rng.below(40)); };
        const Sample x(uniform(rng, rows(), 3)), y(uniform(rng, rows(), 3, -0.5, 1.0)),
            z(gaussian(rng, rows(), 3, 0.7));
        worst_id = std::max(worst_id, cmd(x, x, 5, w));
        worst_sym = std::max(worst_sym, std::abs(cmd(x, y, 5, w) - cmd(y, x, 5, w)));
        worst_tri = std::max(worst_tri, cmd(x, z, 5, w) - cmd(x, y, 5, w) - cmd(y, z, 5, w));
    }
    return {worst_id == 0.0 && worst_sym <= kSymmetryTol && worst_tri <= kTriangleTol,
            "identity max " + num(worst_id) + ", symmetry max " + num(worst_sym) + ", triangle excess max " +
                num(worst_tri)};
}

// ---------------------------------------------------------------- 3

Outcome decreasing_bound() {
    CounterRng rng = CounterRng(kSeed).fork(3);
    const CmdWeights w = default_weights(0.0, 1.0, kBoundOrders);
    double worst_ratio = 0.0;
    bool ok = true;
    for (int d : {1, 3}) {
        for (int i = 0; i < kBoundPairs; ++i) {
            const auto n = static_cast<Eigen::Index>(2 + rng.below(60));
            // skewed and two-point draws push central moments toward their extremes
            Matrix a = uniform(rng, n, d).array().pow(1.0 + static_cast<double>(i % 6));
            Matrix b = uniform(rng, n + 3, d);
            if (i % 5 == 0) b = (b.array() > 0.5).cast<double>();
            const auto terms = cmd_terms(Sample(a), Sample(b), kBoundOrders, w);
            for (int j = 1; j <= kBoundOrders; ++j) {
                const double bound = cmd_term_bound(j, d);
                const double term = terms[static_cast<std::size_t>(j - 1)];
                ok = ok && term <= bound + kBoundTol;
                worst_ratio = std::max(worst_ratio, term / bound);
            }
        }
    }
    return {ok, "largest term / bound = " + num(worst_ratio)};
}

// ---------------------------------------------------------------- 4

Vector finite_difference(const NetParams& p, const std::function<double(const NetParams&)>& f) {
    const Vector theta = p.flatten();
    Vector g(theta.size());
    NetParams q = p;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Vector t = theta;
        t(i) += kFiniteDifferenceStep;
        q.assign(t);
        const double up = f(q);
        t(i) -= 2.0 * kFiniteDifferenceStep;
        q.assign(t);
        g(i) = (up - f(q)) / (2.0 * kFiniteDifferenceStep);
    }
    return g;
}

Outcome gradient_oracle() {
    CounterRng rng = CounterRng(kSeed).fork(4);
    double worst_ce = 0.0, worst_cmd = 0.0;
    for (int i = 0; i < kGradientInstances; ++i) {
        const auto d = static_cast<Eigen::Index>(1 + rng.below(4));
        const auto w = static_cast<Eigen::Index>(1 + rng.below(5));
        const auto c = static_cast<Eigen::Index>(2 + rng.below(2));
        const auto n = static_cast<Eigen::Index>(2 + rng.below(5));
        const int m = 1 + static_cast<int>(rng.below(5));
        NetParams p = NetParams::zeros(d, w, c);
        p.assign(gaussian(rng, p.size(), 1));
        Matrix y = uniform(rng, n, c, 0.05, 1.0);
        y = y.array().colwise() / y.rowwise().sum().array();
        const LabeledBatch batch(Sample(gaussian(rng, n, d)), y);
        const Sample xt(gaussian(rng, n, d, 1.6));
        const CmdWeights weights = CmdWeights::ones(m);

        const Vector ce = ce_grad(p, batch).flatten();
        const Vector ce_fd = finite_difference(p, [&](const NetParams& q) { return ce_loss(q, batch); });
        const Vector cm = cmd_grad(p, batch.inputs, xt, m, weights).flatten();
        const Vector cm_fd =
            finite_difference(p, [&](const NetParams& q) { return hidden_cmd(q, batch.inputs, xt, m, weights); });
        worst_ce = std::max(worst_ce, relative_error(ce, ce_fd));
        worst_cmd = std::max(worst_cmd, relative_error(cm, cm_fd));
    }
    return {worst_ce <= kGradientRelTol && worst_cmd <= kGradientRelTol,
            "max relative error ce " + num(worst_ce) + ", cmd " + num(worst_cmd)};
}

// ---------------------------------------------------------------- 5

Outcome toy_adaptation() {
    ExperimentConfig cfg;
    cfg.experiment = "toy-mann";
    cfg.seed = kSeed;
    const Report r = run(cfg);
    const auto& rows = r.tables.at("accuracy").rows;  // lambda, source_acc, target_acc, hidden_cmd
    const double base_source = rows.at(0).at(1), base_target = rows.at(0).at(2), mann_target = rows.at(1).at(2);
    return {mann_target - base_target >= kToyMinGain && base_source >= kToyMinSourceAccuracy,
            "target accuracy mann " + num(mann_target) + " vs baseline " + num(base_target) +
                ", baseline source accuracy " + num(base_source)};
}

// ---------------------------------------------------------------- 6

Vector krylov_pls(const Matrix& x, const Vector& y, int s) {
    const Matrix xc = center_columns(x);
    const Vector yc = y.array() - y.mean();
    const Matrix g = xc.transpose() * xc;
    Matrix k(x.cols(), s);
    k.col(0) = xc.transpose() * yc;
    for (int i = 1; i < s; ++i) k.col(i) = g * k.col(i - 1);
    const Matrix q = Eigen::HouseholderQR<Matrix>(k).householderQ() * Matrix::Identity(x.cols(), s);
    const Matrix xq = xc * q;
    return q * (xq.transpose() * xq).ldlt().solve(xq.transpose() * yc);
}

// Best of several projected-gradient runs over the unit sphere.
Vector sphere_oracle(const Matrix& s, const Vector& y, const Matrix& lambda, double gamma, CounterRng& rng) {
    const Matrix a = gamma * lambda;
    const Vector g = s.transpose() * y;
    const double lipschitz = 2.0 * (a.norm() + g.norm()) + 1.0;
    Vector best;
    double best_value = 0.0;
    for (int start = 0; start < 8; ++start) {
        Vector w = gaussian(rng, s.cols(), 1);
        w.normalize();
        for (int it = 0; it < 20000; ++it) {
            w -= (2.0 * (a * w) - 2.0 * g) / lipschitz;
            w.normalize();
        }
        const double v = direction_objective(s, y, lambda, gamma, w);
        if (best.size() == 0 || v < best_value) {
            best = w;
            best_value = v;
        }
    }
    return best;
}

Outcome dipals_checks(std::string& info) {
    CounterRng rng = CounterRng(kSeed).fork(6);
    std::vector<std::string> failed;

    // gamma = 0 and identical domains against the Krylov-space PLS oracle
    double worst_zero = 0.0, worst_same = 0.0;
    for (int s = 1; s <= 4; ++s) {
        const Matrix xp = gaussian(rng, 40, 6), xq = gaussian(rng, 35, 6, 1.5);
        const Vector y = xp * gaussian(rng, 6, 1) + 0.1 * gaussian(rng, 40, 1);
        DiplsConfig zero;
        zero.n_components = s;
        worst_zero = std::max(worst_zero, relative_error(fit(Sample(xp), y, Sample(xq), zero).coef, krylov_pls(xp, y, s)));
        DiplsConfig fixed = zero;
        fixed.gamma_mode = GammaMode::kFixed;
        fixed.gamma = 10.0;
        worst_same = std::max(worst_same, relative_error(fit(Sample(xp), y, Sample(xp), fixed).coef, krylov_pls(xp, y, s)));
    }
    if (worst_zero > kNipalsTol) failed.push_back("gamma=0");
    if (worst_same > kNipalsTol) failed.push_back("identical domains");

    // closed-form direction against a numerical sphere-constrained minimizer,
    // gamma from the heuristic of each instance
    double worst_closed = 0.0, worst_sphere_rule = 0.0;
    for (int i = 0; i < kSphereInstances; ++i) {
        const Matrix s = center_columns(gaussian(rng, 6, 3));
        const Vector y = gaussian(rng, 6, 1);
        const Matrix lam = lambda_matrix(s, center_columns(gaussian(rng, 9, 3, 1.7)));
        const double gamma = gamma_heuristic(s, y, lam).gamma;
        const Vector oracle = sphere_oracle(s, y, lam, gamma, rng);
        worst_closed = std::max(worst_closed, (direction(s, y, lam, gamma) - oracle).norm());
        worst_sphere_rule = std::max(
            worst_sphere_rule, (direction(s, y, lam, gamma, DirectionRule::kSphereConstrained) - oracle).norm());
    }
    if (worst_closed > kSphereTol) failed.push_back("closed form vs sphere minimizer");

    // regularizer bound on random unit vectors
    double worst_excess = -1e300;
    for (int i = 0; i < kRegularizerVectors; ++i) {
        const Matrix sp = center_columns(gaussian(rng, 15, 4)), sq = center_columns(gaussian(rng, 12, 4, 1.8));
        const Matrix lam = lambda_matrix(sp, sq);
        Vector w = gaussian(rng, 4, 1);
        w.normalize();
        const double diff = w.dot((sample_covariance(sp) - sample_covariance(sq)) * w);
        worst_excess = std::max(worst_excess, std::abs(diff) - w.dot(lam * w));
    }
    if (worst_excess > kRegularizerTol) failed.push_back("regularizer bound");

    info = "sphere-constrained rule vs the same oracle: max deviation " + num(worst_sphere_rule);
    std::string detail = "gamma=0 rel err " + num(worst_zero) + ", identical-domain rel err " + num(worst_same) +
                         ", closed-form vs sphere minimizer max deviation " + num(worst_closed) +
                         ", regularizer bound max excess " + num(worst_excess);
    if (!failed.empty()) {
        detail += "; failed:";
        for (const auto& f : failed) detail += " [" + f + "]";
    }
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------- 7

Outcome maxent_checks() {
    const QuadratureGrid grid;
    std::vector<std::string> failed;

    const LegendreBasis b5(5);
    const auto uniform_fit = fit_maxent(Vector::Zero(5), b5, grid);
    const double lambda_norm = uniform_fit.lambda().cwiseAbs().maxCoeff();
    if (lambda_norm > kUniformLambdaTol) failed.push_back("uniform");

    double worst_match = 0.0, worst_kl = 0.0;
    for (const auto& [mean, sd] : std::vector<std::pair<double, double>>{{0.3, 0.15}, {0.6, 0.3}, {0.5, 0.1}, {0.8, 0.5}}) {
        auto raw = [=](double x) { return std::exp(-0.5 * (x - mean) * (x - mean) / (sd * sd)); };
        const double z = grid.integrate(raw);
        const DensityFn p = [=](double x) { return raw(x) / z; };
        for (int m = 1; m <= 4; ++m) {
            const LegendreBasis basis(m);
            const Vector mu = density_moments(p, basis, grid);
            const auto star = fit_maxent(mu, basis, grid);
            worst_match = std::max(worst_match, (star.moments(grid) - mu).cwiseAbs().maxCoeff());
            const DensityFn q = [&](double x) { return star.density(x); };
            worst_kl = std::max(worst_kl, std::abs(kl(p, q, grid) - (entropy(star, grid) - entropy(p, grid))));
        }
    }
    if (worst_match > kMomentMatchTol) failed.push_back("moment matching");
    if (worst_kl > kKlIdentityTol) failed.push_back("kl identity");

    CounterRng rng = CounterRng(kSeed).fork(7);
    double worst_pinsker = -1e300;
    for (int i = 0; i < kPinskerPairs; ++i) {
        const LegendreBasis basis(1 + static_cast<int>(rng.below(5)));
        auto fitted = [&] {
            const Vector lam = gaussian(rng, basis.order(), 1, 0.7);
            return fit_maxent(MaxEntModel::from_lambda(basis, lam, grid).moments(grid), basis, grid);
        };
        const auto p = fitted(), q = fitted();
        const DensityFn pf = [&](double x) { return p.density(x); };
        const DensityFn qf = [&](double x) { return q.density(x); };
        worst_pinsker = std::max(worst_pinsker, l1(pf, qf, grid) / 2.0 - std::sqrt(kl(pf, qf, grid) / 2.0));
    }
    if (worst_pinsker > kPinskerSlack) failed.push_back("pinsker");

    std::string detail = "uniform |lambda| " + num(lambda_norm) + ", moment mismatch " + num(worst_match) +
                         ", kl identity error " + num(worst_kl) + ", pinsker max excess " + num(worst_pinsker);
    for (const auto& f : failed) detail += " [failed " + f + "]";
    return {failed.empty(), detail};
}

// ---------------------------------------------------------------- 8

Outcome bounds_demo_check() {
    bool ok = true;
    std::string detail;
    for (int m : {2, 3}) {
        const Report r = bounds_demo(kSeed, m, default_bounds_grid());
        int checked = 0, violated = 0;
        for (const auto& row : r.tables.at("bounds").rows) {  // ..., l1_density, moment_l1, right_side, precondition
            if (row[4] != 1.0) continue;
            ++checked;
            if (!(row[1] <= row[3])) ++violated;
        }
        ok = ok && checked > 0 && violated == 0;
        detail += (detail.empty() ? "" : "; ") + std::string("m=") + std::to_string(m) + ": " +
                  std::to_string(checked) + " rows under the precondition, " + std::to_string(violated) + " violated";
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 9

Outcome scitsm_alignment() {
    const Eigen::Index s = 6, k = 50, d = 2, t = 40, z = 2;
    const double noise = 0.1, smooth = 1.0;
    const RhoMap map = RhoMap::linear_offset(z, d, 1.0, noise);
    const auto domains = gen_multidomain_ts(kSeed, s, k, d, t, map);
    const MeanCurves curves = fit_mean_curves(domains, smooth);
    std::vector<Vector> rhos;
    for (const auto& dom : domains) rhos.push_back(dom.rho);
    const CorrectionModel model = fit_corrections(curves, rhos, CorrectionConfig{});
    const SmoothingConfig sc;

    Matrix before(s, t), after(s, t);
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto& dom = domains[static_cast<std::size_t>(i)];
        Vector sum_b = Vector::Zero(t), sum_a = Vector::Zero(t);
        for (const auto& x : dom.series) {
            sum_b += x.row(sc.feature).transpose();
            sum_a += transform(x, dom.rho, model, sc);
        }
        before.row(i) = smooth_curve(sum_b / static_cast<double>(k), smooth).transpose();
        after.row(i) = smooth_curve(sum_a / static_cast<double>(k), smooth).transpose();
    }
    const double spread_before = (before.rowwise() - before.colwise().mean()).cwiseAbs().maxCoeff();
    const double spread_after = (after.rowwise() - after.colwise().mean()).cwiseAbs().maxCoeff();
    const double threshold = kAlignmentSigmas * noise / std::sqrt(static_cast<double>(k));

    const CorrectionModel zero = CorrectionModel::zeros(t, model.anchor_count(), z, d);
    bool identity = true;
    for (const auto& dom : domains)
        for (const auto& x : dom.series)
            identity = identity && transform(x, dom.rho, zero, sc) == Vector(x.row(sc.feature).transpose());

    return {spread_after <= threshold && identity,
            "max deviation from the cross-domain mean " + num(spread_after) + " (before " + num(spread_before) +
                ") vs threshold " + num(threshold) + ", zero-model identity " + (identity ? "exact" : "broken")};
}

// ---------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "momentda_acceptance_determinism";
    fs::remove_all(root);
    std::vector<fs::path> dirs{root / "a", root / "b"};
    for (const auto& dir : dirs) {
        const std::string cmd =
            std::string(MOMENTDA_CLI) + " run toy-mann --seed 42 --out " + dir.string() + " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "cli run failed"};
    }
    std::size_t files = 0;
    bool same = true;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
        ++files;
        const fs::path other = dirs[1] / entry.path().filename();
        same = same && fs::exists(other) && slurp(entry.path()) == slurp(other);
    }
    fs::remove_all(root);
    return {same && files > 0, std::to_string(files) + " files compared, " + (same ? "identical" : "different")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        std::string name;
        double time_limit;  // seconds; 0 = none
        std::function<Outcome()> check;
    };
    std::string dipals_info;
    const std::vector<Criterion> criteria{
        {1, "mean over-penalization ordering", kOverpenalizationSeconds, overpenalization},
        {2, "cmd metric axioms", 0.0, cmd_axioms},
        {3, "decreasing upper bound", 0.0, decreasing_bound},
        {4, "gradient oracle", kGradientSeconds, gradient_oracle},
        {5, "toy adaptation", kToySeconds, toy_adaptation},
        {6, "dipals reductions and optimality", 0.0, [&] { return dipals_checks(dipals_info); }},
        {7, "maxent correctness", 0.0, maxent_checks},
        {8, "bounds demo", 0.0, bounds_demo_check},
        {9, "scitsm alignment", 0.0, scitsm_alignment},
        {10, "determinism", 0.0, determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit > 0.0 && seconds > c.time_limit) {
            o.passed = false;
            o.detail += "; runtime above " + num(c.time_limit) + " s";
        }
        if (!o.passed) ++failures;
        std::printf("[%s] %d %s: %s (%.2f s)\n", o.passed ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                    seconds);
        if (c.id == 6 && !dipals_info.empty()) std::printf("       info: %s\n", dipals_info.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
