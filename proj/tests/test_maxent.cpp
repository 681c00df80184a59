#include "momentda/maxent.hpp"
#include "momentda/rng.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace momentda;

namespace {

const QuadratureGrid& grid() {
    static const QuadratureGrid g;
    return g;
}

// Truncated Gaussian on [0, 1], normalized by quadrature.
DensityFn truncated_gaussian(double mean, double sd) {
    auto raw = [=](double x) { return std::exp(-0.5 * (x - mean) * (x - mean) / (sd * sd)); };
    const double z = grid().integrate(raw);
    return [=](double x) { return raw(x) / z; };
}

// A polynomial density outside every exponential family of low order.
double poly_density(double x) { return (1.0 + 6.0 * x * x) / 3.0; }

double beta33(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }

}  // namespace

TEST(Quadrature, WeightsAndNodes) {
    const auto& g = grid();
    EXPECT_EQ(g.size(), 256);
    EXPECT_NEAR(g.weights().sum(), 1.0, 1e-12);
    EXPECT_GT(g.nodes().minCoeff(), 0.0);
    EXPECT_LT(g.nodes().maxCoeff(), 1.0);
    EXPECT_NEAR(g.integrate([](double x) { return std::pow(x, 20); }), 1.0 / 21.0, 1e-14);
}

TEST(Legendre, PointValues) {
    const LegendreBasis b(5);
    EXPECT_NEAR(b.eval(1, 0.5), 0.0, 1e-15);
    EXPECT_NEAR(b.eval(1, 0.0), -std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(b.eval(2, 1.0), std::sqrt(5.0), 1e-14);
    EXPECT_NEAR(b.eval(2, 0.5), -std::sqrt(5.0) / 2.0, 1e-14);
    // eta_j(1) = sqrt(2j + 1) and eta_j(0) = (-1)^j sqrt(2j + 1)
    for (int j = 1; j <= 5; ++j) {
        EXPECT_NEAR(b.eval(j, 1.0), std::sqrt(2.0 * j + 1.0), 1e-12);
        EXPECT_NEAR(b.eval(j, 0.0), std::pow(-1.0, j) * std::sqrt(2.0 * j + 1.0), 1e-12);
    }
    EXPECT_THROW(b.eval(0, 0.5), std::invalid_argument);
    EXPECT_THROW(b.eval(6, 0.5), std::invalid_argument);
    EXPECT_THROW(b.eval(1, 1.5), std::invalid_argument);
    EXPECT_THROW(LegendreBasis(6), std::invalid_argument);
}

TEST(Legendre, OrthonormalUnderQuadrature) {
    const LegendreBasis b(5);
    for (int i = 1; i <= 5; ++i) {
        EXPECT_NEAR(grid().integrate([&](double x) { return b.eval(i, x); }), 0.0, 1e-12);
        for (int j = 1; j <= 5; ++j) {
            const double g = grid().integrate([&](double x) { return b.eval(i, x) * b.eval(j, x); });
            EXPECT_NEAR(g, i == j ? 1.0 : 0.0, 1e-10) << i << "," << j;
        }
    }
}

TEST(Legendre, EmpiricalMoments) {
    const LegendreBasis b(3);
    const Vector one = empirical_legendre_moments(testutil::column({0.5}), b);
    EXPECT_NEAR(one(0), 0.0, 1e-15);
    EXPECT_NEAR(one(1), -std::sqrt(5.0) / 2.0, 1e-14);

    CounterRng rng(3);
    const Matrix u = testutil::uniform_matrix(rng, 100000, 1);
    const Vector mu = empirical_legendre_moments(Sample(u), b);
    EXPECT_LT(mu.cwiseAbs().maxCoeff(), 0.02);

    Matrix twice(200000, 1);
    twice << u, u;
    EXPECT_NEAR((empirical_legendre_moments(Sample(twice), b) - mu).norm(), 0.0, 1e-14);
    EXPECT_THROW(empirical_legendre_moments(testutil::column({0.5, 1.2}), b), std::invalid_argument);
}

TEST(MaxEnt, ZeroMomentsGiveUniform) {
    const LegendreBasis b(4);
    const auto model = fit_maxent(Vector::Zero(4), b, grid());
    EXPECT_LT(model.lambda().norm(), 1e-12);
    for (double x : {0.0, 0.3, 1.0}) EXPECT_NEAR(model.density(x), 1.0, 1e-12);
    EXPECT_NEAR(entropy(model, grid()), 0.0, 1e-12);
}

TEST(MaxEnt, RecoversTruncatedGaussian) {
    const LegendreBasis b(2);
    const auto p = truncated_gaussian(0.3, 0.15);
    MaxEntFitOptions opts;
    opts.tol = 1e-13;
    const auto model = fit_maxent(density_moments(p, b, grid()), b, grid(), opts);
    for (Eigen::Index k = 0; k < grid().size(); ++k) {
        const double x = grid().nodes()(k);
        EXPECT_NEAR(model.density(x) / p(x), 1.0, 1e-6) << x;
    }
}

TEST(MaxEnt, MomentsMatchAndFixedPoint) {
    const LegendreBasis b(5);
    const Vector mu = density_moments(poly_density, b, grid());
    MaxEntFitOptions opts;
    opts.tol = 1e-10;
    const auto model = fit_maxent(mu, b, grid(), opts);
    EXPECT_LE((model.moments(grid()) - mu).cwiseAbs().maxCoeff(), opts.tol);
    EXPECT_NEAR(grid().integrate([&](double x) { return model.density(x); }), 1.0, 1e-8);
    const auto again = fit_maxent(model.moments(grid()), b, grid(), opts);
    EXPECT_LT((again.lambda() - model.lambda()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(MaxEnt, NewtonObjectiveDecreases) {
    const LegendreBasis b(5);
    MaxEntFitTrace trace;
    fit_maxent(density_moments(beta33, b, grid()), b, grid(), {}, &trace);
    ASSERT_GE(trace.objective.size(), 2u);
    // rounding slack for the final gradient-driven steps
    for (std::size_t i = 1; i < trace.objective.size(); ++i)
        EXPECT_LE(trace.objective[i], trace.objective[i - 1] + 1e-14 * std::abs(trace.objective[i - 1]));
}

TEST(MaxEnt, OutsideMomentSetFails) {
    const LegendreBasis b(1);
    Vector mu(1);
    mu << 2.0;  // |eta_1| <= sqrt(3) on [0, 1]
    MaxEntFitOptions opts;
    opts.max_iter = 30;
    EXPECT_THROW(fit_maxent(mu, b, grid(), opts), ConvergenceError);
}

TEST(MaxEnt, DensityProperties) {
    const LegendreBasis b(1);
    Vector lam(1);
    lam << -1.5;
    const auto model = MaxEntModel::from_lambda(b, lam, grid());
    double prev = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double v = model.density(i / 20.0);
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_THROW(model.density(-0.1), std::invalid_argument);
}

TEST(MaxEnt, KlEqualsEntropyGap) {
    for (int m : {2, 4}) {
        const LegendreBasis b(m);
        for (const DensityFn& p : {DensityFn(poly_density), DensityFn(beta33), truncated_gaussian(0.6, 0.3)}) {
            MaxEntFitOptions opts;
            opts.tol = 1e-10;
            const auto star = fit_maxent(density_moments(p, b, grid()), b, grid(), opts);
            const DensityFn q = [&](double x) { return star.density(x); };
            EXPECT_NEAR(kl(p, q, grid()), entropy(star, grid()) - entropy(p, grid()), 1e-6);
            // maximality of the entropy under the moment constraints
            EXPECT_GE(entropy(star, grid()), entropy(p, grid()) - 1e-12);
        }
    }
}

TEST(MaxEnt, Pinsker) {
    const LegendreBasis b(5);
    CounterRng rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        Vector l1v(5), l2v(5);
        for (int j = 0; j < 5; ++j) {
            l1v(j) = rng.normal(0.0, 0.6);
            l2v(j) = rng.normal(0.0, 0.6);
        }
        const auto p = MaxEntModel::from_lambda(b, l1v, grid());
        const auto q = MaxEntModel::from_lambda(b, l2v, grid());
        const DensityFn pf = [&](double x) { return p.density(x); };
        const DensityFn qf = [&](double x) { return q.density(x); };
        EXPECT_LE(l1(pf, qf, grid()) / 2.0, std::sqrt(kl(pf, qf, grid()) / 2.0) + 1e-8);
    }
}

TEST(MaxEnt, QuadratureUtilities) {
    const DensityFn uniform = [](double) { return 1.0; };
    EXPECT_NEAR(entropy(uniform, grid()), 0.0, 1e-15);
    EXPECT_NEAR(kl(poly_density, poly_density, grid()), 0.0, 1e-15);
    EXPECT_NEAR(l1(uniform, uniform, grid()), 0.0, 1e-15);
    const DensityFn bad = [](double x) { return x - 0.5; };
    EXPECT_THROW(kl(uniform, bad, grid()), std::invalid_argument);
}
