#include "momentda/scitsm.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>

namespace momentda {

void DomainSeries::validate() const {
    require(!series.empty(), "domain has no series");
    for (const auto& s : series) {
        require(s.rows() == series.front().rows() && s.cols() == series.front().cols(),
                "all series of a domain must share d and t");
        require(s.allFinite(), "series contain non-finite values");
    }
    require(steps() >= 2, "series need at least two time steps");
    require(rho.size() >= 1 && rho.allFinite(), "scenario parameters must be finite and nonempty");
}

Vector smooth_curve(const Vector& values, double smooth) {
    require(smooth >= 0.0 && std::isfinite(smooth), "smoothing weight must be >= 0");
    const Eigen::Index t = values.size();
    if (smooth == 0.0 || t < 4) return values;
    using Sparse = Eigen::SparseMatrix<double>;
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index i = 0; i + 2 < t; ++i) {
        trip.emplace_back(i, i, 1.0);
        trip.emplace_back(i, i + 1, -2.0);
        trip.emplace_back(i, i + 2, 1.0);
    }
    Sparse d2(t - 2, t);
    d2.setFromTriplets(trip.begin(), trip.end());
    Sparse system = Sparse(d2.transpose()) * d2 * smooth;
    Sparse eye(t, t);
    eye.setIdentity();
    system += eye;
    Eigen::SimplicialLDLT<Sparse> solver(system);
    if (solver.info() != Eigen::Success) throw std::runtime_error("smoothing system factorization failed");
    return solver.solve(values);
}

MeanCurves fit_mean_curves(const std::vector<DomainSeries>& domains, double smooth) {
    require(!domains.empty(), "no source domains");
    require(smooth >= 0.0 && std::isfinite(smooth), "smoothing weight must be >= 0");
    for (const auto& d : domains) {
        d.validate();
        require(d.features() == domains.front().features() && d.steps() == domains.front().steps(),
                "all domains must share d and t");
    }
    MeanCurves out;
    const Eigen::Index t = domains.front().steps();
    if (t < 4) out.warnings.push_back("fewer than four time steps; using raw means without smoothing");
    for (const auto& d : domains) {
        Matrix mean = Matrix::Zero(d.features(), t);
        for (const auto& s : d.series) mean += s;
        mean /= static_cast<double>(d.count());
        if (t >= 4)
            for (Eigen::Index f = 0; f < mean.rows(); ++f)
                mean.row(f) = smooth_curve(mean.row(f).transpose(), smooth).transpose();
        out.curves.push_back(std::move(mean));
    }
    return out;
}

std::vector<Eigen::Index> equidistant_anchors(Eigen::Index steps, Eigen::Index count) {
    require(count >= 2, "at least two anchors are required");
    require(count <= steps, "more anchors than time steps");
    std::vector<Eigen::Index> a;
    for (Eigen::Index j = 0; j < count; ++j)
        a.push_back(static_cast<Eigen::Index>(
            std::llround(static_cast<double>(j) * static_cast<double>(steps - 1) / static_cast<double>(count - 1))));
    return a;
}

void CorrectionConfig::validate() const {
    require(anchors == 0 || anchors >= 2, "anchor count must be >= 2");
    require(alpha >= 0.0 && beta >= 0.0, "alpha and beta must be >= 0");
    require(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
    require(window >= 0, "window u must be >= 0");
    require(max_iter >= 1 && tol > 0.0, "invalid iteration settings");
}

Vector CorrectionModel::correction(Eigen::Index j, const Vector& rho) const {
    require(rho.size() == parameters(), "scenario parameter vector has the wrong length");
    return theta[static_cast<std::size_t>(j)].transpose() * rho + bias[static_cast<std::size_t>(j)];
}

CorrectionModel CorrectionModel::zeros(Eigen::Index steps, Eigen::Index anchors, Eigen::Index parameters,
                                       Eigen::Index features) {
    CorrectionModel m;
    m.steps = steps;
    m.anchors = equidistant_anchors(steps, anchors);
    m.theta.assign(static_cast<std::size_t>(anchors), Matrix::Zero(parameters, features));
    m.bias.assign(static_cast<std::size_t>(anchors), Vector::Zero(features));
    m.converged = true;
    return m;
}

namespace {

// Parameters packed as [vec(theta_0) .. vec(theta_{b-1}), bias_0 .. bias_{b-1}].
struct Problem {
    const MeanCurves& curves;
    const std::vector<Vector>& rhos;
    const CorrectionConfig& cfg;
    std::vector<Eigen::Index> anchors;
    Eigen::Index z = 0, d = 0;

    Eigen::Index theta_size() const { return static_cast<Eigen::Index>(anchors.size()) * z * d; }
    Eigen::Index size() const { return theta_size() + static_cast<Eigen::Index>(anchors.size()) * d; }

    Eigen::Map<const Matrix> theta(const Vector& x, std::size_t j) const {
        return {x.data() + static_cast<Eigen::Index>(j) * z * d, z, d};
    }
    Eigen::Map<const Vector> bias(const Vector& x, std::size_t j) const {
        return {x.data() + theta_size() + static_cast<Eigen::Index>(j) * d, d};
    }
    Eigen::Map<Matrix> theta(Vector& x, std::size_t j) const {
        return {x.data() + static_cast<Eigen::Index>(j) * z * d, z, d};
    }
    Eigen::Map<Vector> bias(Vector& x, std::size_t j) const {
        return {x.data() + theta_size() + static_cast<Eigen::Index>(j) * d, d};
    }

    Vector target(std::size_t i, std::size_t j) const { return curves.curves[i].col(anchors[j]); }

    double coupling_weight(std::size_t j, std::size_t r) const {
        const double gap = std::abs(static_cast<double>(j) - static_cast<double>(r));
        return 1.0 / std::pow(cfg.delta, gap - 1.0);
    }

    bool in_window(std::size_t j, std::size_t r) const {
        return r != j && std::abs(static_cast<long>(j) - static_cast<long>(r)) <= cfg.window;
    }

    Vector residual(const Vector& x, std::size_t i, std::size_t j) const {
        return target(i, j) - theta(x, j).transpose() * rhos[i] - bias(x, j);
    }

    // Data term with ||e|| replaced by sqrt(||e||^2 + mu^2) >= ||e||; mu = 0 is the exact term.
    double smooth_part(const Vector& x, double mu) const {
        double v = 0.0;
        for (std::size_t j = 0; j < anchors.size(); ++j) {
            for (std::size_t i = 0; i < rhos.size(); ++i) {
                const Vector e = residual(x, i, j);
                v += cfg.squared_data_term ? e.squaredNorm() : std::sqrt(e.squaredNorm() + mu * mu);
            }
            for (std::size_t r = 0; r < anchors.size(); ++r)
                if (in_window(j, r)) v += cfg.alpha * coupling_weight(j, r) * (theta(x, j) - theta(x, r)).squaredNorm();
        }
        return v;
    }

    double penalty(const Vector& x) const { return cfg.beta * x.head(theta_size()).cwiseAbs().sum(); }

    double objective(const Vector& x, double mu = 0.0) const { return smooth_part(x, mu) + penalty(x); }

    // At a zero residual the exact data term contributes the zero subgradient.
    Vector gradient(const Vector& x, double mu) const {
        Vector g = Vector::Zero(size());
        for (std::size_t j = 0; j < anchors.size(); ++j) {
            auto gt = theta(g, j);
            auto gb = bias(g, j);
            for (std::size_t i = 0; i < rhos.size(); ++i) {
                const Vector e = residual(x, i, j);
                Vector u;
                if (cfg.squared_data_term) {
                    u = 2.0 * e;
                } else {
                    const double n = std::sqrt(e.squaredNorm() + mu * mu);
                    u = n == 0.0 ? Vector::Zero(e.size()) : Vector(e / n);
                }
                gt.noalias() -= rhos[i] * u.transpose();
                gb -= u;
            }
            // Each unordered pair appears twice in the double sum.
            for (std::size_t r = 0; r < anchors.size(); ++r)
                if (in_window(j, r)) gt += 4.0 * cfg.alpha * coupling_weight(j, r) * (theta(x, j) - theta(x, r));
        }
        return g;
    }

    // Gradient step followed by the l1 prox on the slope block.
    Vector prox_step(const Vector& y, const Vector& g, double step) const {
        Vector x = y - step * g;
        const double k = step * cfg.beta;
        x.head(theta_size()) =
            x.head(theta_size()).unaryExpr([k](double v) { return v > k ? v - k : (v < -k ? v + k : 0.0); });
        return x;
    }
};

}  // namespace

double correction_objective(const CorrectionModel& model, const MeanCurves& curves, const std::vector<Vector>& rhos) {
    require(model.anchor_count() >= 2 && static_cast<Eigen::Index>(rhos.size()) == curves.domains(),
            "model and data do not match");
    const Problem p{curves, rhos, model.config, model.anchors, model.parameters(), model.features()};
    Vector x(p.size());
    for (std::size_t j = 0; j < model.anchors.size(); ++j) {
        p.theta(x, j) = model.theta[j];
        p.bias(x, j) = model.bias[j];
    }
    return p.objective(x);
}

CorrectionModel fit_corrections(const MeanCurves& curves, const std::vector<Vector>& rhos,
                                const CorrectionConfig& config) {
    config.validate();
    require(curves.domains() >= 1, "no mean curves");
    require(static_cast<Eigen::Index>(rhos.size()) == curves.domains(), "one parameter vector per domain required");
    const Eigen::Index z = rhos.front().size();
    for (const auto& r : rhos) require(r.size() == z && r.allFinite(), "parameter vectors must share length and be finite");
    const Eigen::Index t = curves.steps();
    const Eigen::Index b = config.anchors == 0 ? std::min<Eigen::Index>(10, t) : config.anchors;

    CorrectionModel model = CorrectionModel::zeros(t, b, z, curves.features());
    model.config = config;
    model.config.anchors = b;
    model.converged = false;
    const Problem problem{curves, rhos, model.config, model.anchors, z, curves.features()};

    // theta starts at zero; biases start at the per-anchor mean over domains.
    Vector x = Vector::Zero(problem.size());
    double scale = 0.0;
    for (std::size_t j = 0; j < model.anchors.size(); ++j) {
        auto bj = problem.bias(x, j);
        for (std::size_t i = 0; i < rhos.size(); ++i) bj += problem.target(i, j);
        bj /= static_cast<double>(rhos.size());
        for (std::size_t i = 0; i < rhos.size(); ++i) scale = std::max(scale, (problem.target(i, j) - bj).norm());
    }
    if (scale == 0.0) scale = 1.0;

    // The printed data term is not differentiable where a residual vanishes, and
    // plain proximal steps stall there. It is replaced by sqrt(||e||^2 + mu^2),
    // an upper bound within mu per residual, with mu shrunk geometrically; the
    // smoothed objective recorded in the trace never increases.
    const double mu_final = config.squared_data_term ? 0.0 : 1e-9 * scale;
    double mu = config.squared_data_term ? 0.0 : 1e-1 * scale;

    // Accelerated proximal gradient with backtracking; a step that would raise
    // the objective restarts the momentum from the current iterate.
    Vector y = x, x_prev = x;
    double momentum = 1.0;
    double fx = problem.smooth_part(x, mu) + problem.penalty(x);
    model.objective_trace.push_back(fx);
    double step = 1.0 / scale;
    int it = 0;
    for (; it < config.max_iter; ++it) {
        const double fy = problem.smooth_part(y, mu);
        const Vector g = problem.gradient(y, mu);
        Vector cand;
        double f_cand = 0.0;
        bool accepted = false;
        for (int h = 0; h < 100; ++h, step *= 0.5) {
            cand = problem.prox_step(y, g, step);
            const Vector dx = cand - y;
            f_cand = problem.smooth_part(cand, mu);
            if (f_cand <= fy + g.dot(dx) + dx.squaredNorm() / (2.0 * step) + 1e-15 * std::abs(fy)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        const double map_norm = (cand - y).norm() / step;
        double f_new = f_cand + problem.penalty(cand);
        if (f_new > fx) {
            // Restart: take the step from x itself, which cannot increase the objective.
            momentum = 1.0;
            y = x;
            step *= 2.0;
            continue;
        }
        x_prev = x;
        x = cand;
        fx = f_new;
        if (map_norm <= config.tol && mu <= mu_final) {
            model.objective_trace.push_back(fx);
            model.converged = true;
            ++it;
            break;
        }
        if (mu > mu_final && map_norm <= std::max(config.tol, 10.0 * mu)) {
            mu = std::max(mu_final, 0.1 * mu);
            fx = problem.smooth_part(x, mu) + problem.penalty(x);
            momentum = 1.0;
            x_prev = x;
        }
        model.objective_trace.push_back(fx);
        const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        y = x + ((momentum - 1.0) / next) * (x - x_prev);
        momentum = next;
        step *= 1.25;
    }
    for (std::size_t j = 0; j < model.anchors.size(); ++j) {
        model.theta[j] = problem.theta(x, j);
        model.bias[j] = problem.bias(x, j);
    }
    model.iterations = it;
    model.objective = problem.objective(x);
    return model;
}

void SmoothingConfig::validate() const {
    require(gamma > 0.0 && gamma <= 1.0, "smoothing gamma must lie in (0, 1]");
    require(window >= 0, "smoothing window u must be >= 0");
    require(feature >= 0, "feature index must be >= 0");
}

std::vector<WeightedPair> smoothing_pairs(const std::vector<Eigen::Index>& anchors, double v,
                                          const SmoothingConfig& cfg, bool* clamped) {
    cfg.validate();
    require(anchors.size() >= 2, "at least two anchors are required");
    const auto b = static_cast<Eigen::Index>(anchors.size());
    const double first = static_cast<double>(anchors.front()), last = static_cast<double>(anchors.back());
    const bool outside = v < first || v > last;
    if (clamped) *clamped = outside;
    const double vv = std::clamp(v, first, last);

    // Largest anchor <= v and smallest anchor >= v; an exact hit yields the anchor itself.
    Eigen::Index lo = 0;
    while (lo + 1 < b && static_cast<double>(anchors[static_cast<std::size_t>(lo + 1)]) <= vv) ++lo;
    Eigen::Index hi = b - 1;
    while (hi - 1 >= 0 && static_cast<double>(anchors[static_cast<std::size_t>(hi - 1)]) >= vv) --hi;

    const int count = cfg.window + 1;
    std::vector<WeightedPair> pairs;
    double total = 0.0;
    for (int k = cfg.window, rank = 1; k >= 0; --k, ++rank) {
        const Eigen::Index left = std::max<Eigen::Index>(0, lo - k);
        const Eigen::Index right = std::min<Eigen::Index>(b - 1, hi + k);
        const double index = cfg.weighting == PairWeighting::kRank ? rank : static_cast<double>(left + 1);
        const double w = std::pow(cfg.gamma, (count - 2.0 * index + 2.0) / 2.0);
        pairs.push_back({left, right, w});
        total += w;
    }
    for (auto& p : pairs) p.weight /= total;
    return pairs;
}

Vector correction_curve(const CorrectionModel& model, const Vector& rho, const SmoothingConfig& cfg,
                        std::vector<std::string>* warnings) {
    cfg.validate();
    require(cfg.feature < model.features(), "feature index exceeds the model's feature count");
    const Eigen::Index b = model.anchor_count();
    Vector phi(b);
    for (Eigen::Index j = 0; j < b; ++j) phi(j) = model.correction(j, rho)(cfg.feature);

    Vector curve(model.steps);
    bool warned = false;
    for (Eigen::Index v = 0; v < model.steps; ++v) {
        bool clamped = false;
        const auto pairs = smoothing_pairs(model.anchors, static_cast<double>(v), cfg, &clamped);
        if (clamped && !warned && warnings) {
            warnings->push_back("time steps outside the anchor hull were clamped to the nearest pair");
            warned = true;
        }
        double value = 0.0;
        for (const auto& p : pairs) {
            const double ti = static_cast<double>(model.anchors[static_cast<std::size_t>(p.left)]);
            const double tj = static_cast<double>(model.anchors[static_cast<std::size_t>(p.right)]);
            double interp = phi(p.left);
            if (p.right != p.left) interp += (static_cast<double>(v) - ti) * (phi(p.right) - phi(p.left)) / (tj - ti);
            value += p.weight * interp;
        }
        curve(v) = value;
    }
    return curve;
}

Vector transform(const Matrix& x, const Vector& rho, const CorrectionModel& model, const SmoothingConfig& cfg,
                 std::vector<std::string>* warnings) {
    require(x.cols() == model.steps, "series length does not match the model");
    require(cfg.feature < x.rows(), "feature index exceeds the series' feature count");
    require(x.allFinite(), "series contain non-finite values");
    return x.row(cfg.feature).transpose() - correction_curve(model, rho, cfg, warnings);
}

}  // namespace momentda
