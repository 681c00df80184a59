#include "momentda/moment_metrics.hpp"

#include "momentda/csv.hpp"
#include "momentda/linalg.hpp"

#include <cmath>
#include <sstream>

namespace momentda {

CmdWeights::CmdWeights(Vector a) : a_(std::move(a)) {
    require(a_.size() >= 1, "CMD weights need at least one entry");
    require(a_.allFinite() && (a_.array() >= 0.0).all(), "CMD weights must be finite and nonnegative");
}

CmdWeights CmdWeights::ones(int m) {
    require(m >= 1, "CMD order must be at least 1");
    return CmdWeights(Vector::Ones(m));
}

KernelSpec KernelSpec::polynomial(int degree, double bias) {
    require(degree >= 1, "polynomial kernel degree must be >= 1");
    KernelSpec k;
    k.kind = Kind::kPolynomial;
    k.degree = degree;
    k.bias = bias;
    return k;
}

KernelSpec KernelSpec::gaussian(double sigma) {
    require(sigma > 0.0 && std::isfinite(sigma), "gaussian kernel bandwidth must be > 0");
    KernelSpec k;
    k.kind = Kind::kGaussian;
    k.bandwidth = sigma;
    return k;
}

KernelSpec KernelSpec::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    require(!parts.empty(), "empty kernel specification");
    if (parts[0] == "linear" && parts.size() == 1) return linear();
    if (parts[0] == "poly" && (parts.size() == 2 || parts.size() == 3))
        return polynomial(std::stoi(parts[1]), parts.size() == 3 ? std::stod(parts[2]) : 1.0);
    if (parts[0] == "gauss" && parts.size() == 2) return gaussian(std::stod(parts[1]));
    throw std::invalid_argument("unknown kernel '" + text + "' (expected linear, poly:<deg>[:<bias>], gauss:<sigma>)");
}

double KernelSpec::operator()(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y) const {
    switch (kind) {
        case Kind::kLinear:
            return x.dot(y);
        case Kind::kPolynomial:
            return std::pow(bias + x.dot(y), degree);
        case Kind::kGaussian:
            return std::exp(-(x - y).squaredNorm() / (2.0 * bandwidth * bandwidth));
    }
    return 0.0;
}

std::string KernelSpec::describe() const {
    switch (kind) {
        case Kind::kLinear:
            return "linear";
        case Kind::kPolynomial:
            return "poly:" + std::to_string(degree) + ":" + format_double(bias);
        case Kind::kGaussian:
            return "gauss:" + format_double(bandwidth);
    }
    return "?";
}

MomentSummary central_moments(const Sample& x, int m, MonomialMode mode) {
    require(m >= 1, "moment order must be at least 1");
    require(!x.empty(), "empty sample");
    MomentSummary s;
    s.order = m;
    s.mean = x.data().colwise().mean().transpose();
    const Matrix centered = x.data().rowwise() - s.mean.transpose();
    const double n = static_cast<double>(x.rows());
    Matrix power = centered;
    for (int j = 2; j <= m; ++j) {
        power = power.cwiseProduct(centered);
        if (j == 2 && mode == MonomialMode::kCrossSecondOrder) {
            const Eigen::Index d = x.cols();
            const Matrix second = centered.transpose() * centered / n;
            Vector v(d * (d + 1) / 2);
            Eigen::Index k = 0;
            for (Eigen::Index a = 0; a < d; ++a)
                for (Eigen::Index b = a; b < d; ++b) v(k++) = second(a, b);
            s.central.push_back(std::move(v));
        } else {
            s.central.push_back(power.colwise().sum().transpose() / n);
        }
    }
    return s;
}

std::vector<double> cmd_terms(const Sample& xp, const Sample& xq, int m, const CmdWeights& weights,
                              MonomialMode mode) {
    require_same_dim(xp, xq);
    require(weights.order() == m, "CMD weights length must equal the order m");
    const MomentSummary p = central_moments(xp, m, mode);
    const MomentSummary q = central_moments(xq, m, mode);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(m));
    terms.push_back(weights[0] * (p.mean - q.mean).norm());
    for (int j = 2; j <= m; ++j)
        terms.push_back(weights[j - 1] * (p.central[static_cast<std::size_t>(j - 2)] -
                                          q.central[static_cast<std::size_t>(j - 2)]).norm());
    return terms;
}

double cmd(const Sample& xp, const Sample& xq, int m, const CmdWeights& weights, MonomialMode mode) {
    double total = 0.0;
    for (double t : cmd_terms(xp, xq, m, weights, mode)) total += t;
    return total;
}

CmdWeights default_weights(double a, double b, int m) {
    require(m >= 1, "CMD order must be at least 1");
    require(std::isfinite(a) && std::isfinite(b) && a != b, "default_weights needs a finite range with a != b");
    const double width = std::abs(b - a);
    Vector w(m);
    for (int j = 1; j <= m; ++j) w(j - 1) = std::pow(width, -j);
    return CmdWeights(std::move(w));
}

double cmd_term_bound(int j, int d) {
    require(j >= 1 && d >= 1, "cmd_term_bound needs j >= 1 and d >= 1");
    const double jj = j;
    return 2.0 * std::sqrt(static_cast<double>(d)) *
           (1.0 / (jj + 1.0) * std::pow(jj / (jj + 1.0), jj) + std::pow(2.0, -(1.0 + jj)));
}

namespace {

double mean_kernel(const Matrix& a, const Matrix& b, const KernelSpec& k) {
    double s = 0.0;
    if (k.kind != KernelSpec::Kind::kGaussian) {
        const Matrix g = a * b.transpose();
        if (k.kind == KernelSpec::Kind::kLinear) return g.mean();
        return (g.array() + k.bias).pow(k.degree).mean();
    }
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) s += k(a.row(i), b.row(j));
    return s / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

// Multi-indices over d coordinates with total degree <= degree.
void enumerate_powers(int d, int degree, std::vector<int>& current, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == d) {
        out.push_back(current);
        return;
    }
    int used = 0;
    for (int c : current) used += c;
    for (int e = 0; used + e <= degree; ++e) {
        current.push_back(e);
        enumerate_powers(d, degree, current, out);
        current.pop_back();
    }
}

double binomial_count(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Mean of the explicit feature map of (xᵀy + c)^D: sqrt(D! c^{D-|a|} / ((D-|a|)! a!)) x^a.
Vector mean_poly_features(const Matrix& x, const std::vector<std::vector<int>>& powers, const KernelSpec& k) {
    std::vector<double> fact(static_cast<std::size_t>(k.degree) + 1, 1.0);
    for (int i = 1; i <= k.degree; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
    Vector out(static_cast<Eigen::Index>(powers.size()));
    for (std::size_t f = 0; f < powers.size(); ++f) {
        int total = 0;
        double denom = 1.0;
        for (int e : powers[f]) {
            total += e;
            denom *= fact[static_cast<std::size_t>(e)];
        }
        const int rest = k.degree - total;
        const double coef = std::sqrt(fact[static_cast<std::size_t>(k.degree)] * std::pow(k.bias, rest) /
                                      (fact[static_cast<std::size_t>(rest)] * denom));
        Vector col = Vector::Ones(x.rows());
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            for (int e = 0; e < powers[f][static_cast<std::size_t>(c)]; ++e) col = col.cwiseProduct(x.col(c));
        out(static_cast<Eigen::Index>(f)) = coef * col.mean();
    }
    return out;
}

}  // namespace

double mmd_squared(const Sample& xp, const Sample& xq, const KernelSpec& kernel) {
    require_same_dim(xp, xq);
    if (kernel.kind == KernelSpec::Kind::kGaussian) require(kernel.bandwidth > 0.0, "gaussian bandwidth must be > 0");
    if (kernel.kind == KernelSpec::Kind::kPolynomial) require(kernel.degree >= 1, "polynomial degree must be >= 1");
    // Linear and polynomial kernels have finite feature maps, so the V-statistic
    // equals the squared distance of the mean embeddings without n^2 work.
    if (kernel.kind == KernelSpec::Kind::kLinear)
        return (xp.data().colwise().mean() - xq.data().colwise().mean()).squaredNorm();
    const int d = static_cast<int>(xp.cols());
    if (kernel.kind == KernelSpec::Kind::kPolynomial && kernel.bias >= 0.0 &&
        binomial_count(d + kernel.degree, kernel.degree) <= 4096.0) {
        std::vector<std::vector<int>> powers;
        std::vector<int> current;
        enumerate_powers(d, kernel.degree, current, powers);
        return (mean_poly_features(xp.data(), powers, kernel) - mean_poly_features(xq.data(), powers, kernel))
            .squaredNorm();
    }
    return mean_kernel(xp.data(), xp.data(), kernel) + mean_kernel(xq.data(), xq.data(), kernel) -
           2.0 * mean_kernel(xp.data(), xq.data(), kernel);
}

double coral(const Sample& xp, const Sample& xq) {
    require_same_dim(xp, xq);
    require(xp.rows() >= 2 && xq.rows() >= 2, "coral needs at least two rows per sample");
    return (sample_covariance(xp.data()) - sample_covariance(xq.data())).norm();
}

double l1_moment_distance(const Sample& xp, const Sample& xq, int m) {
    require_same_dim(xp, xq);
    require(m >= 1, "moment order must be at least 1");
    double total = 0.0;
    Matrix pp = xp.data(), pq = xq.data();
    for (int j = 1; j <= m; ++j) {
        total += (pp.colwise().mean() - pq.colwise().mean()).cwiseAbs().sum();
        pp = pp.cwiseProduct(xp.data());
        pq = pq.cwiseProduct(xq.data());
    }
    return total;
}

}  // namespace momentda
