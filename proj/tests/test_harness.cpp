#include "momentda/harness.hpp"
#include "momentda/moment_metrics.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace momentda;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("momentda_test_" + name);
    fs::remove_all(p);
    return p;
}

RowVector class_mean(const Matrix& x, const std::vector<int>& classes, int c) {
    RowVector s = RowVector::Zero(x.cols());
    int n = 0;
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (classes[i] == c) {
            s += x.row(static_cast<Eigen::Index>(i));
            ++n;
        }
    return s / n;
}

}  // namespace

TEST(GenToy, DeterministicAndShaped) {
    const auto a = gen_toy(7, 50), b = gen_toy(7, 50), c = gen_toy(8, 50);
    EXPECT_EQ(a.source.inputs.data(), b.source.inputs.data());
    EXPECT_EQ(a.target.data(), b.target.data());
    EXPECT_NE(a.source.inputs.data(), c.source.inputs.data());
    EXPECT_EQ(a.source.rows(), 150);
    EXPECT_EQ(a.source.classes(), 3);
    EXPECT_EQ(a.target.rows(), 150);
    EXPECT_EQ(a.target_classes.size(), 150u);
    EXPECT_THROW(gen_toy(1, 9), std::invalid_argument);
}

TEST(GenToy, ZeroKnobsGiveSourceLaw) {
    ToyKnobs k;
    k.rotation = 0.0;
    k.shift_x = 0.0;
    k.shift_y = 0.0;
    const Eigen::Index n = 4000;
    const auto d = gen_toy(3, n, k);
    const double se = 4.0 * k.spread / std::sqrt(static_cast<double>(n));
    for (int c = 0; c < 3; ++c) {
        const RowVector diff = class_mean(d.source.inputs.data(), d.source_classes, c) -
                               class_mean(d.target.data(), d.target_classes, c);
        EXPECT_LT(diff.cwiseAbs().maxCoeff(), se * std::sqrt(2.0));
    }
}

TEST(GenToy, DefaultKnobsMoveTheTarget) {
    const auto d = gen_toy(3, 2000);
    const RowVector shift = d.target.data().colwise().mean() - d.source.inputs.data().colwise().mean();
    EXPECT_NEAR(shift(0), 0.5, 0.05);
    EXPECT_NEAR(shift(1), -0.3, 0.05);
}

TEST(GenOverpenalization, CoupledDrawsAndMoments) {
    const Eigen::Index n = 200000;
    const auto d = gen_overpenalization(42, n);
    EXPECT_LT((d.q_right.data().array() - d.p.data().array() - 0.02).abs().maxCoeff(), 1e-15);
    const double se = 1.0 / std::sqrt(static_cast<double>(n));
    // Beta(0.4, 0.4): mean 1/2, variance 1/(4 * 1.8)
    EXPECT_NEAR(d.p.data().mean(), 0.5, 4.0 * 0.8 * std::sqrt(1.0 / 7.2) * se);
    EXPECT_NEAR(d.q_left.data().mean(), 0.5, 4.0 * 0.27 * se);
    const double var_p = (d.p.data().array() - d.p.data().mean()).square().mean();
    EXPECT_NEAR(var_p, 0.64 / 7.2, 0.005);
    EXPECT_GE(d.p.data().minCoeff(), 0.1);
    EXPECT_LE(d.p.data().maxCoeff(), 0.9);

    const auto u = gen_overpenalization(42, 1000, false);
    EXPECT_GT((u.q_right.data().array() - u.p.data().array() - 0.02).abs().maxCoeff(), 0.01);
}

TEST(GenMultidomain, ShapesAndOffsets) {
    const RhoMap map = RhoMap::linear_offset(2, 3, 1.0, 0.0);
    const std::vector<Vector> rhos{Vector::Zero(2), Vector::Ones(2)};
    const auto doms = gen_multidomain_ts(5, 2, 4, 3, 30, map, &rhos);
    ASSERT_EQ(doms.size(), 2u);
    EXPECT_EQ(doms[0].count(), 4);
    EXPECT_EQ(doms[0].features(), 3);
    EXPECT_EQ(doms[0].steps(), 30);
    // noiseless: domain 1 minus domain 0 is the offset row sum per feature
    const Vector expected = map.offset.transpose() * Vector::Ones(2);
    for (Eigen::Index f = 0; f < 3; ++f)
        for (Eigen::Index v = 0; v < 30; ++v) {
            EXPECT_NEAR(doms[1].series[0](f, v) - doms[0].series[0](f, v), expected(f), 1e-14);
            EXPECT_NEAR(doms[0].series[2](f, v), base_signal(f, v, 30), 1e-14);
        }
    EXPECT_THROW(gen_multidomain_ts(5, 1, 4, 3, 30, map), std::invalid_argument);
    EXPECT_THROW(gen_multidomain_ts(5, 2, 4, 2, 30, map), std::invalid_argument);
}

TEST(ParseValues, RangesAndLists) {
    EXPECT_EQ(parse_values("1..5"), (std::vector<double>{1, 2, 3, 4, 5}));
    EXPECT_EQ(parse_values("0.5,2,10"), (std::vector<double>{0.5, 2, 10}));
    EXPECT_THROW(parse_values("5..1"), std::invalid_argument);
    EXPECT_THROW(parse_values("a,b"), std::invalid_argument);
    EXPECT_THROW(parse_values(""), std::invalid_argument);
}

TEST(Run, UnknownExperiment) {
    ExperimentConfig c;
    c.experiment = "nope";
    EXPECT_THROW(run(c), std::invalid_argument);
    EXPECT_EQ(experiment_names().size(), 6u);
}

TEST(Report, JsonLayoutAndFiniteness) {
    Report r;
    r.experiment = "demo";
    r.seed = 3;
    r.check("ok", true, "fine");
    r.check("bad", false, "broken");
    r.tables["t"] = Table{{"a", "b"}, {}};
    r.tables["t"].add({1.0, 2.0});
    EXPECT_THROW(r.tables["t"].add({1.0}), std::invalid_argument);
    r.plots["p"] = Plot{"x", "y", {{0.0, 1.0}, {1.0, 2.0}}};
    const std::string json = r.to_json();
    EXPECT_FALSE(r.passed());
    EXPECT_EQ(r.failures(), std::vector<std::string>{"bad"});
    EXPECT_LT(json.find("\"schema_version\""), json.find("\"experiment\""));
    EXPECT_NE(json.find("demo_p.csv"), std::string::npos);
    EXPECT_EQ(json, r.to_json());

    const fs::path dir = scratch("report");
    const auto path = r.write(dir.string());
    EXPECT_EQ(slurp(path), json);
    EXPECT_TRUE(fs::exists(dir / "demo_p.csv"));
    fs::remove_all(dir);

    r.tables["t"].add({std::nan(""), 1.0});
    EXPECT_THROW(r.to_json(), std::runtime_error);
}

TEST(Run, OverpenalizationIsDeterministic) {
    ExperimentConfig c;
    c.experiment = "overpenalization";
    c.knobs["n"] = 50000;
    const auto a = run(c), b = run(c);
    EXPECT_EQ(a.to_json(), b.to_json());
    EXPECT_NE(a.to_json().find("knob_n"), std::string::npos);
}

TEST(Run, BoundsDemoRowsAndPrecondition) {
    const auto r = bounds_demo(42, 3, default_bounds_grid());
    EXPECT_TRUE(r.passed());
    const auto& t = r.tables.at("bounds");
    EXPECT_EQ(t.rows.size(), 25u);
    for (const auto& row : t.rows) {
        if (row[4] == 1.0) EXPECT_LE(row[1], row[3]);
        EXPECT_GE(row[1], 0.0);
    }
}

TEST(Run, SmallExperimentsPass) {
    for (const std::string name : {"dipals-synth", "scitsm-synth"}) {
        ExperimentConfig c;
        c.experiment = name;
        const auto r = run(c);
        EXPECT_TRUE(r.passed()) << name << ": " << r.to_json();
    }
}

TEST(Cli, RunTwiceGivesIdenticalBytes) {
    const fs::path a = scratch("cli_a"), b = scratch("cli_b");
    const std::string base = std::string(MOMENTDA_CLI) + " run toy-mann --seed 7 --knob n_per_class=40 --knob iters=300";
    ASSERT_EQ(std::system((base + " --out " + a.string() + " > /dev/null").c_str()), 0);
    ASSERT_EQ(std::system((base + " --out " + b.string() + " > /dev/null").c_str()), 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        ++files;
        EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
    }
    EXPECT_GE(files, 2u);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, UsageErrorsExitWithTwo) {
    const std::string cli = MOMENTDA_CLI;
    EXPECT_EQ(WEXITSTATUS(std::system((cli + " run no-such-experiment > /dev/null 2>&1").c_str())), 2);
    EXPECT_EQ(WEXITSTATUS(std::system((cli + " metrics --metric nope a.csv b.csv > /dev/null 2>&1").c_str())), 2);
}
