#include "momentda/dipals.hpp"

#include "momentda/linalg.hpp"

#include <cmath>
#include <limits>

namespace momentda {

DiplsConfig DiplsConfig::parse_gamma(int components, const std::string& gamma) {
    DiplsConfig c;
    c.n_components = components;
    if (gamma == "heuristic") {
        c.gamma_mode = GammaMode::kHeuristic;
        return c;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(gamma, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == gamma.size() && std::isfinite(value) && value >= 0.0,
            "gamma must be 'heuristic' or a nonnegative number, got '" + gamma + "'");
    c.gamma_mode = value == 0.0 ? GammaMode::kZero : GammaMode::kFixed;
    c.gamma = value;
    return c;
}

void DiplsConfig::validate(Eigen::Index d) const {
    require(n_components >= 1, "number of components must be at least 1");
    require(n_components <= d, "number of components exceeds the input dimension");
    if (gamma_mode == GammaMode::kFixed) require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be finite and >= 0");
}

Matrix lambda_matrix(const Matrix& sp, const Matrix& sq) {
    require(sp.cols() == sq.cols(), "source and target dimensions differ");
    require(sp.rows() >= 2 && sq.rows() >= 2, "lambda_matrix needs at least two rows per domain");
    require(sp.allFinite() && sq.allFinite(), "lambda_matrix: non-finite input");
    const Matrix diff = sample_covariance(sp) - sample_covariance(sq);
    const SymmetricEigen eig = jacobi_eigen(diff);
    return eig.vectors * eig.values.cwiseAbs().asDiagonal() * eig.vectors.transpose();
}

Matrix lambda_matrix(const Sample& sp, const Sample& sq) { return lambda_matrix(sp.data(), sq.data()); }

namespace {

constexpr double kMaxCondition = 1e12;

// Unit minimizer of wᵀAw - 2gᵀw on the sphere, A symmetric PSD.
Vector sphere_minimizer(const Matrix& a, const Vector& g) {
    const SymmetricEigen eig = jacobi_eigen(a);
    const Vector gt = eig.vectors.transpose() * g;
    const Eigen::Index n = gt.size();
    const double a_min = eig.values(0);
    const double gnorm = g.norm();

    // secular(s) = sum gt_k^2 / (a_k - a_min + s)^2, decreasing in s > 0.
    auto secular = [&](double s) {
        double v = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double den = eig.values(k) - a_min + s;
            v += gt(k) * gt(k) / (den * den);
        }
        return v;
    };

    const double degenerate_tol = 1e-14 * std::max(1.0, gnorm);
    bool hard_case = true;
    for (Eigen::Index k = 0; k < n; ++k)
        if (eig.values(k) - a_min <= 1e-12 * std::max(1.0, std::abs(eig.values(n - 1))) && std::abs(gt(k)) > degenerate_tol)
            hard_case = false;

    Vector w_eig(n);
    if (hard_case) {
        // The gradient has no weight on the bottom eigenspace; fill the gap there.
        double mass = 0.0;
        Eigen::Index bottom = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double den = eig.values(k) - a_min;
            if (den <= 1e-12 * std::max(1.0, std::abs(eig.values(n - 1)))) {
                w_eig(k) = 0.0;
                bottom = k;
            } else {
                w_eig(k) = gt(k) / den;
                mass += w_eig(k) * w_eig(k);
            }
        }
        if (mass <= 1.0) {
            w_eig(bottom) = std::sqrt(1.0 - mass);
            return eig.vectors * w_eig;
        }
    }
    double lo = 0.0, hi = std::max(gnorm, 1e-300);
    for (int it = 0; it < 300 && hi - lo > 1e-17 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (secular(mid) > 1.0 ? lo : hi) = mid;
    }
    const double s = hi;
    for (Eigen::Index k = 0; k < n; ++k) w_eig(k) = gt(k) / (eig.values(k) - a_min + s);
    const Vector w = eig.vectors * w_eig;
    return w / w.norm();
}

}  // namespace

Vector direction(const Matrix& s, const Vector& y, const Matrix& lambda, double gamma, DirectionRule rule) {
    require(s.rows() == y.size(), "response length must equal the number of rows");
    require(lambda.rows() == s.cols() && lambda.cols() == s.cols(), "Lambda must be d x d");
    require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be finite and >= 0");
    const double yy = y.squaredNorm();
    require(yy > 0.0, "response has zero variance (yᵀy = 0)");
    const Vector sty = s.transpose() * y;
    require(sty.squaredNorm() > 0.0, "response is orthogonal to every input column (Sᵀy = 0)");

    const Eigen::Index d = s.cols();
    const Matrix system = Matrix::Identity(d, d) + (gamma / yy) * lambda;
    if (gamma > 0.0) {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(system, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
        const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        if (condition > kMaxCondition)
            throw IllConditionedError("direction system is ill-conditioned (cond " + std::to_string(condition) + ")",
                                      condition);
    }

    if (rule == DirectionRule::kSphereConstrained) return sphere_minimizer(gamma * lambda, sty);

    const Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) throw IllConditionedError("direction system is not positive definite", 0.0);
    const Vector v = llt.solve(sty / yy);
    return v / v.norm();
}

double direction_objective(const Matrix& s, const Vector& y, const Matrix& lambda, double gamma, const Vector& w) {
    return (s - y * w.transpose()).squaredNorm() + gamma * w.dot(lambda * w);
}

GammaHeuristic gamma_heuristic(const Matrix& s, const Vector& y, const Matrix& lambda) {
    const Vector w0 = direction(s, y, lambda, 0.0);
    const double denominator = w0.dot(lambda * w0);
    if (!(denominator > 1e-14)) return {0.0, true};
    return {(s - y * w0.transpose()).squaredNorm() / denominator, false};
}

DiplsModel fit(const Sample& xp, const Vector& y, const Sample& xq, const DiplsConfig& config) {
    require_same_dim(xp, xq);
    require(xp.rows() == y.size(), "response length must equal the number of source rows");
    require(xp.rows() >= 2 && xq.rows() >= 2, "DIPALS needs at least two rows per domain");
    require(y.allFinite(), "response contains non-finite values");
    config.validate(xp.cols());

    const Eigen::Index d = xp.cols();
    const int s = config.n_components;
    DiplsModel model;
    model.x_mean_source = xp.data().colwise().mean().transpose();
    model.x_mean_target = xq.data().colwise().mean().transpose();
    model.y_mean = y.mean();
    model.weights.resize(d, s);
    model.loadings.resize(d, s);
    model.inner.resize(s);
    model.source_scores.resize(xp.rows(), s);

    Matrix src = xp.data().rowwise() - model.x_mean_source.transpose();
    Matrix tgt = xq.data().rowwise() - model.x_mean_target.transpose();
    Vector resp = y.array() - model.y_mean;

    for (int i = 0; i < s; ++i) {
        const int component = i + 1;
        const Matrix lam = lambda_matrix(src, tgt);
        DiplsComponent info;
        switch (config.gamma_mode) {
            case GammaMode::kZero:
                info.gamma = 0.0;
                break;
            case GammaMode::kFixed:
                info.gamma = config.gamma;
                break;
            case GammaMode::kHeuristic: {
                const auto h = gamma_heuristic(src, resp, lam);
                info.gamma = h.gamma;
                info.gamma_warning = h.warning;
                if (h.warning)
                    model.warnings.push_back("component " + std::to_string(component) +
                                             ": heuristic denominator w0ᵀΛw0 vanished, gamma set to 0");
                break;
            }
        }
        if (resp.squaredNorm() == 0.0 || (src.transpose() * resp).squaredNorm() == 0.0)
            throw DegenerateComponentError("component " + std::to_string(component) +
                                               ": residual response carries no covariance with the inputs",
                                           component);
        const Vector w = direction(src, resp, lam, info.gamma, config.rule);
        const Vector tp = src * w;
        const Vector tq = tgt * w;
        const double tt = tp.squaredNorm();
        if (tt < 1e-14)
            throw DegenerateComponentError("component " + std::to_string(component) + ": source score vanished",
                                           component);
        const double c = tp.dot(resp) / tt;
        const Vector p = src.transpose() * tp / tt;
        // t_pᵀt_q needs equally sized domains; otherwise the target loading is
        // normalized by its own score, t_qᵀt_q.
        const bool paired = tp.size() == tq.size();
        const double ptq = paired ? tp.dot(tq) : tq.squaredNorm();

        info.variance_difference = w.dot((sample_covariance(src) - sample_covariance(tgt)) * w);
        info.regularizer = w.dot(lam * w);
        info.target_loading_denominator = ptq;

        src -= tp * p.transpose();
        if (ptq != 0.0) {
            if (paired && std::abs(ptq) < 1e-8 * std::sqrt(tt * tq.squaredNorm()))
                model.warnings.push_back("component " + std::to_string(component) +
                                         ": target loading denominator t_pᵀt_q is nearly zero");
            const Vector q = tgt.transpose() * tq / ptq;
            tgt -= tq * q.transpose();
        } else {
            model.warnings.push_back("component " + std::to_string(component) +
                                     ": t_pᵀt_q = 0, target matrix left undeflated");
        }
        resp -= c * tp;
        info.source_norm = src.norm();

        model.weights.col(i) = w;
        model.loadings.col(i) = p;
        model.inner(i) = c;
        model.source_scores.col(i) = tp;
        model.components.push_back(info);
    }

    if (xp.rows() != xq.rows())
        model.warnings.push_back("domains differ in size; target loadings normalized by t_qᵀt_q");

    const Matrix ptw = model.loadings.transpose() * model.weights;
    const Eigen::FullPivLU<Matrix> lu(ptw);
    if (!lu.isInvertible()) throw RankError("PᵀW is singular; reduce the number of components");
    model.coef = model.weights * lu.solve(model.inner);
    return model;
}

Vector predict(const DiplsModel& model, const Sample& x) {
    require(x.cols() == model.coef.size(), "input dimension does not match the model");
    return ((x.data().rowwise() - model.x_mean_source.transpose()) * model.coef).array() + model.y_mean;
}

double rmse(const Vector& a, const Vector& b) {
    require(a.size() == b.size() && a.size() > 0, "rmse needs equal-length nonempty vectors");
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace momentda
