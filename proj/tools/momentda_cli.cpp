// momentda: command-line front end for the moment-based adaptation toolkit.
//
// Exit codes: 0 success, 1 failed experiment assertions, 2 usage or input
// error, 3 numerical failure.

#include "momentda/csv.hpp"
#include "momentda/dipals.hpp"
#include "momentda/harness.hpp"
#include "momentda/mann.hpp"
#include "momentda/maxent.hpp"
#include "momentda/moment_metrics.hpp"
#include "momentda/scitsm.hpp"
#include "momentda/serialize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

using namespace momentda;

namespace {

struct Scaler {
    Vector lo, hi;

    static Scaler fit(const Matrix& m) { return {m.colwise().minCoeff().transpose(), m.colwise().maxCoeff().transpose()}; }
    Matrix apply(const Matrix& m) const {
        Matrix out = m;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double w = hi(c) - lo(c);
            out.col(c) = w > 0.0 ? Vector((m.col(c).array() - lo(c)) / w) : Vector::Constant(m.rows(), 0.5);
        }
        return out;
    }
    Json to_json() const { return {{"min", vector_to_json(lo)}, {"max", vector_to_json(hi)}}; }
};

std::vector<int> read_labels(const std::string& path) {
    const Matrix m = read_csv(path);
    require(m.cols() == 1, "label file must have a single column");
    std::vector<int> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        require(m(i, 0) >= 0 && m(i, 0) == std::floor(m(i, 0)), "labels must be nonnegative integers");
        out.push_back(static_cast<int>(m(i, 0)));
    }
    return out;
}

Vector read_column(const std::string& path) {
    const Matrix m = read_csv(path);
    require(m.cols() == 1, path + " must have a single column");
    return m.col(0);
}

Vector parse_vector(const std::string& text) {
    const auto v = parse_values(text);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void emit(const Json& j, const std::string& out) {
    if (out.empty()) std::cout << j.dump(2) << "\n";
    else write_json(out, j);
}

int report_exit(const Report& r, const std::string& out_dir) {
    if (out_dir.empty()) std::cout << r.to_json();
    else std::cout << r.write(out_dir) << "\n";
    for (const auto& a : r.assertions)
        std::cerr << (a.passed ? "[PASS] " : "[FAIL] ") << a.name << ": " << a.detail << "\n";
    return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Moment-based domain adaptation toolkit"};
    app.require_subcommand(1);
    int code = 0;

    // metrics ---------------------------------------------------------------
    auto* metrics = app.add_subcommand("metrics", "Discrepancy between two samples (CSV, rows = observations)");
    std::vector<std::string> metric_files;
    std::string metric = "cmd", kernel = "poly:2";
    int m_order = kDefaultCmdOrder;
    std::vector<double> range;
    metrics->add_option("files", metric_files, "Two sample CSVs")->required()->expected(2)->check(CLI::ExistingFile);
    metrics->add_option("--metric", metric, "cmd | mmd | coral | l1")->check(CLI::IsMember({"cmd", "mmd", "coral", "l1"}));
    metrics->add_option("--m", m_order, "Moment order")->check(CLI::PositiveNumber);
    metrics->add_option("--range", range,
                        "Data range a b for the default CMD weights; without it both samples are min-max "
                        "scaled to [0, 1] jointly per feature")
        ->expected(2);
    metrics->add_option("--kernel", kernel, "MMD kernel: linear | poly:d[:b] | gauss:s");
    metrics->callback([&] {
        Matrix a = read_csv(metric_files[0]), b = read_csv(metric_files[1]);
        Json out{{"metric", metric}};
        double lo = 0.0, hi = 1.0;
        if (!range.empty()) {
            lo = range[0];
            hi = range[1];
        } else if (metric == "cmd") {
            const Scaler s = Scaler::fit(concat(Sample(a), Sample(b)).data());
            a = s.apply(a);
            b = s.apply(b);
            out["scaler"] = s.to_json();
        }
        const Sample sa(a), sb(b);
        Json per_term = Json::array();
        double value = 0.0;
        if (metric == "cmd") {
            for (double t : cmd_terms(sa, sb, m_order, default_weights(lo, hi, m_order))) {
                per_term.push_back(t);
                value += t;
            }
        } else if (metric == "mmd") {
            const KernelSpec k = KernelSpec::parse(kernel);
            value = mmd_squared(sa, sb, k);
            out["kernel"] = k.describe();
        } else if (metric == "coral") {
            value = coral(sa, sb);
        } else {
            // Per-order contributions of the l1 moment distance.
            for (int j = 1; j <= m_order; ++j) {
                const double cum = l1_moment_distance(sa, sb, j);
                per_term.push_back(cum - value);
                value = cum;
            }
        }
        out["value"] = value;
        out["per_term"] = per_term;
        std::cout << out.dump(2) << "\n";
    });

    // maxent ----------------------------------------------------------------
    auto* maxent = app.add_subcommand("maxent", "Fit a maximum entropy density to a one-column sample");
    std::string me_in, me_out;
    int me_m = 3;
    maxent->add_option("input", me_in, "Sample CSV (one column)")->required()->check(CLI::ExistingFile);
    maxent->add_option("--m", me_m, "Number of Legendre moments (1..5)")->check(CLI::Range(1, 5));
    maxent->add_option("--out", me_out, "Model JSON (stdout when omitted)");
    maxent->callback([&] {
        Matrix x = read_csv(me_in);
        require(x.cols() == 1, "maxent expects a single column");
        Json out{{"kind", "maxent"}, {"order", me_m}};
        if (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0) {
            const Scaler s = Scaler::fit(x);
            x = s.apply(x);
            out["scaler"] = s.to_json();
        }
        const LegendreBasis basis(me_m);
        const QuadratureGrid grid;
        const Vector mu = empirical_legendre_moments(Sample(x), basis);
        MaxEntFitTrace trace;
        const MaxEntModel model = fit_maxent(mu, basis, grid, {}, &trace);
        out["lambda"] = vector_to_json(model.lambda());
        out["log_norm"] = model.log_norm();
        out["entropy"] = entropy(model, grid);
        out["fitted_moments"] = vector_to_json(model.moments(grid));
        out["sample_moments"] = vector_to_json(mu);
        out["iterations"] = trace.objective.size();
        emit(out, me_out);
    });

    // bounds-demo -----------------------------------------------------------
    auto* bounds = app.add_subcommand("bounds-demo", "L1 distance versus moment bound for perturbed maxent pairs");
    std::uint64_t seed = 42;
    int bd_m = 3;
    std::string out_dir;
    bounds->add_option("--seed", seed, "Random seed");
    bounds->add_option("--m", bd_m, "Moment order (2..5)")->check(CLI::Range(2, 5));
    bounds->add_option("--out", out_dir, "Report directory (stdout when omitted)");
    bounds->callback([&] { code = report_exit(bounds_demo(seed, bd_m, default_bounds_grid()), out_dir); });

    // mann-train ------------------------------------------------------------
    auto* mtrain = app.add_subcommand("mann-train", "Train a moment alignment network");
    std::string sx, sy, tx, model_out;
    TrainConfig tc;
    std::string optimizer = "adadelta";
    long iters = tc.max_iters;
    mtrain->add_option("--source", sx, "Source inputs CSV")->required()->check(CLI::ExistingFile);
    mtrain->add_option("--labels", sy, "Source class labels CSV (one integer column)")->required()->check(CLI::ExistingFile);
    mtrain->add_option("--target", tx, "Unlabelled target inputs CSV")->check(CLI::ExistingFile);
    mtrain->add_option("--lambda", tc.reg_weight, "CMD weight (0 = source only)")->check(CLI::NonNegativeNumber);
    mtrain->add_option("--m", tc.cmd_order, "CMD order")->check(CLI::PositiveNumber);
    mtrain->add_option("--hidden", tc.hidden_width, "Hidden units")->check(CLI::PositiveNumber);
    mtrain->add_option("--batch", tc.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
    mtrain->add_option("--iters", iters, "Training iterations")->check(CLI::PositiveNumber);
    mtrain->add_option("--optimizer", optimizer, "sgd | adagrad | adadelta");
    mtrain->add_option("--lr", tc.learning_rate, "Learning rate alpha");
    mtrain->add_option("--seed", seed, "Random seed");
    mtrain->add_option("--out", model_out, "Model JSON")->required();
    mtrain->callback([&] {
        tc.optimizer = parse_optimizer(optimizer);
        tc.max_iters = iters;
        tc.rng_seed = seed;
        const auto labels = read_labels(sy);
        int classes = 0;
        for (int l : labels) classes = std::max(classes, l + 1);
        const auto source = LabeledBatch::one_hot(Sample(read_csv(sx)), labels, std::max(classes, 2));
        require(tc.reg_weight == 0.0 || !tx.empty(), "--lambda > 0 needs --target");
        TrainResult r = tc.reg_weight == 0.0 ? train_supervised(tc, source)
                                             : train(tc, source, Sample(read_csv(tx)), nullptr);
        Json j = to_json(r.params);
        j["config"] = {{"lambda", tc.reg_weight}, {"m", tc.cmd_order},     {"batch", tc.batch_size},
                       {"iters", tc.max_iters},   {"optimizer", optimizer}, {"lr", tc.learning_rate},
                       {"seed", seed}};
        j["final_loss"] = r.loss.empty() ? 0.0 : r.loss.back();
        j["train_accuracy"] = accuracy(r.params, source.inputs, source.labels);
        write_json(model_out, j);
        std::cout << Json{{"train_accuracy", j["train_accuracy"]}, {"final_loss", j["final_loss"]}}.dump(2) << "\n";
    });

    // mann-eval -------------------------------------------------------------
    auto* meval = app.add_subcommand("mann-eval", "Predict with a trained network");
    std::string model_in, ex, ey, pred_out;
    meval->add_option("--model", model_in, "Model JSON")->required()->check(CLI::ExistingFile);
    meval->add_option("--input", ex, "Inputs CSV")->required()->check(CLI::ExistingFile);
    meval->add_option("--labels", ey, "Labels CSV for accuracy")->check(CLI::ExistingFile);
    meval->add_option("--out", pred_out, "Predicted classes CSV");
    meval->callback([&] {
        const NetParams p = net_params_from_json(read_json(model_in));
        const Sample x(read_csv(ex));
        const auto pred = predict_classes(p, x);
        if (!pred_out.empty()) {
            Matrix m(static_cast<Eigen::Index>(pred.size()), 1);
            for (std::size_t i = 0; i < pred.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = pred[i];
            write_csv(pred_out, m, {"class"});
        }
        Json out{{"rows", pred.size()}};
        if (!ey.empty()) {
            const auto labels = read_labels(ey);
            require(labels.size() == pred.size(), "label count differs from the input rows");
            std::size_t hits = 0;
            for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i];
            out["accuracy"] = static_cast<double>(hits) / static_cast<double>(pred.size());
        }
        std::cout << out.dump(2) << "\n";
    });

    // dipals ----------------------------------------------------------------
    auto* dip = app.add_subcommand("dipals", "Fit domain-invariant partial least squares");
    std::string dx, dy, dt, dty, gamma = "heuristic", rule = "closed-form";
    int comps = 2;
    dip->add_option("--train", dx, "Labelled source inputs CSV")->required()->check(CLI::ExistingFile);
    dip->add_option("--y", dy, "Source responses CSV (one column)")->required()->check(CLI::ExistingFile);
    dip->add_option("--target", dt, "Unlabelled target inputs CSV")->required()->check(CLI::ExistingFile);
    dip->add_option("--target-y", dty, "Optional target responses, used only for the reported RMSE")
        ->check(CLI::ExistingFile);
    dip->add_option("--components", comps, "Latent components")->check(CLI::PositiveNumber);
    dip->add_option("--gamma", gamma, "heuristic | 0 | nonnegative value");
    dip->add_option("--rule", rule, "Direction rule")->check(CLI::IsMember({"closed-form", "sphere"}));
    dip->add_option("--out", model_out, "Model JSON")->required();
    dip->callback([&] {
        DiplsConfig cfg = DiplsConfig::parse_gamma(comps, gamma);
        cfg.rule = rule == "sphere" ? DirectionRule::kSphereConstrained : DirectionRule::kClosedForm;
        const Sample xs(read_csv(dx)), xt(read_csv(dt));
        const Vector ys = read_column(dy);
        const DiplsModel m = fit(xs, ys, xt, cfg);
        write_json(model_out, to_json(m));
        Json report{{"components", Json::array()}, {"source_rmse", rmse(predict(m, xs), ys)}};
        for (const auto& c : m.components)
            report["components"].push_back({{"gamma", c.gamma}, {"variance_difference", c.variance_difference},
                                            {"regularizer", c.regularizer}});
        if (!dty.empty()) report["target_rmse"] = rmse(predict(m, xt), read_column(dty));
        report["warnings"] = m.warnings;
        std::cout << report.dump(2) << "\n";
    });

    // dipals-predict --------------------------------------------------------
    auto* dpred = app.add_subcommand("dipals-predict", "Predict responses with a DIPALS model");
    dpred->add_option("--model", model_in, "Model JSON")->required()->check(CLI::ExistingFile);
    dpred->add_option("--input", ex, "Inputs CSV")->required()->check(CLI::ExistingFile);
    dpred->add_option("--y", ey, "Optional responses CSV for RMSE")->check(CLI::ExistingFile);
    dpred->add_option("--out", pred_out, "Predictions CSV");
    dpred->callback([&] {
        const DiplsModel m = dipals_model_from_json(read_json(model_in));
        const Vector pred = predict(m, Sample(read_csv(ex)));
        if (!pred_out.empty()) write_csv(pred_out, pred, {"prediction"});
        Json out{{"rows", pred.size()}};
        if (!ey.empty()) out["rmse"] = rmse(pred, read_column(ey));
        std::cout << out.dump(2) << "\n";
    });

    // scitsm-fit ------------------------------------------------------------
    auto* sfit = app.add_subcommand("scitsm-fit", "Fit parameter-dependent correction curves");
    std::string domains_in;
    double smooth = 1.0;
    CorrectionConfig cc;
    sfit->add_option("--dir", domains_in,
                     "Directory holding domains.json = {\"domains\": [{\"rho\": [...], \"files\": [one k x t "
                     "CSV per feature]}]}, or the path of such a JSON file; CSV paths are relative to it")
        ->required()
        ->check(CLI::ExistingPath);
    sfit->add_option("--smooth", smooth, "Second-difference smoothing weight")->check(CLI::NonNegativeNumber);
    sfit->add_option("--anchors", cc.anchors, "Anchor count (0: min(10, t))");
    sfit->add_option("--alpha", cc.alpha, "Anchor coupling weight");
    sfit->add_option("--beta", cc.beta, "L1 weight");
    sfit->add_option("--delta", cc.delta, "Coupling decay in (0, 1]");
    sfit->add_option("--window", cc.window, "Coupling window u");
    sfit->add_flag("--squared", cc.squared_data_term, "Use squared residual norms");
    sfit->add_option("--out", model_out, "Model JSON")->required();
    sfit->callback([&] {
        std::filesystem::path spec_path(domains_in);
        if (std::filesystem::is_directory(spec_path)) spec_path /= "domains.json";
        const Json spec = read_json(spec_path.string());
        const auto base = spec_path.parent_path();
        std::vector<DomainSeries> domains;
        for (const auto& dj : spec.at("domains")) {
            DomainSeries d;
            d.rho = vector_from_json(dj.at("rho"));
            std::vector<Matrix> per_feature;
            for (const auto& f : dj.at("files")) per_feature.push_back(read_csv((base / f.get<std::string>()).string()));
            require(!per_feature.empty(), "a domain lists no feature files");
            for (const auto& f : per_feature)
                require(f.rows() == per_feature.front().rows() && f.cols() == per_feature.front().cols(),
                        "feature files of a domain must share k x t");
            for (Eigen::Index r = 0; r < per_feature.front().rows(); ++r) {
                Matrix x(static_cast<Eigen::Index>(per_feature.size()), per_feature.front().cols());
                for (std::size_t f = 0; f < per_feature.size(); ++f) x.row(static_cast<Eigen::Index>(f)) = per_feature[f].row(r);
                d.series.push_back(std::move(x));
            }
            domains.push_back(std::move(d));
        }
        const MeanCurves curves = fit_mean_curves(domains, smooth);
        for (const auto& w : curves.warnings) std::cerr << "warning: " << w << "\n";
        std::vector<Vector> rhos;
        for (const auto& d : domains) rhos.push_back(d.rho);
        const CorrectionModel m = fit_corrections(curves, rhos, cc);
        if (!m.converged) std::cerr << "warning: solver stopped before reaching the tolerance\n";
        write_json(model_out, to_json(m));
    });

    // scitsm-apply ----------------------------------------------------------
    auto* sapply = app.add_subcommand("scitsm-apply", "Correct series of the designated feature channel");
    std::string series_in, rho_text;
    SmoothingConfig sc;
    std::string weighting = "rank";
    sapply->add_option("--model", model_in, "Model JSON")->required()->check(CLI::ExistingFile);
    sapply->add_option("--input", series_in, "k x t CSV of the designated channel")->required()->check(CLI::ExistingFile);
    sapply->add_option("--rho", rho_text, "Scenario parameters, comma separated")->required();
    sapply->add_option("--gamma", sc.gamma, "Pair weight decay in (0, 1]");
    sapply->add_option("--window", sc.window, "Nested pairs u");
    sapply->add_option("--feature", sc.feature, "Designated feature channel of the model");
    sapply->add_option("--weighting", weighting, "rank | anchor")->check(CLI::IsMember({"rank", "anchor"}));
    sapply->add_option("--out", pred_out, "Corrected CSV (stdout when omitted)");
    sapply->callback([&] {
        sc.weighting = weighting == "anchor" ? PairWeighting::kAnchorPosition : PairWeighting::kRank;
        const CorrectionModel m = correction_model_from_json(read_json(model_in));
        const Matrix s = read_csv(series_in);
        require(s.cols() == m.steps, "series length does not match the model");
        std::vector<std::string> warnings;
        const Vector curve = correction_curve(m, parse_vector(rho_text), sc, &warnings);
        const Matrix out = s.rowwise() - curve.transpose();
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        if (pred_out.empty()) {
            for (Eigen::Index i = 0; i < out.rows(); ++i) {
                for (Eigen::Index v = 0; v < out.cols(); ++v) std::cout << (v ? "," : "") << format_double(out(i, v));
                std::cout << "\n";
            }
        } else {
            write_csv(pred_out, out);
        }
    });

    // gen -------------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Write a synthetic dataset as CSV files");
    std::string which;
    long n = 0;
    gen->add_option("dataset", which, "toy | overpenalization | multidomain-ts")
        ->required()
        ->check(CLI::IsMember({"toy", "overpenalization", "multidomain-ts"}));
    gen->add_option("--seed", seed, "Random seed");
    gen->add_option("--n", n, "Size (per class, per sample, or series per domain)");
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->callback([&] {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };
        if (which == "toy") {
            const ToyData d = gen_toy(seed, n > 0 ? n : 200);
            write_csv(path("source_x.csv"), d.source.inputs.data(), {"x1", "x2"});
            Matrix ys(static_cast<Eigen::Index>(d.source_classes.size()), 1), yt(ys.rows(), 1);
            for (Eigen::Index i = 0; i < ys.rows(); ++i) {
                ys(i, 0) = d.source_classes[static_cast<std::size_t>(i)];
                yt(i, 0) = d.target_classes[static_cast<std::size_t>(i)];
            }
            write_csv(path("source_y.csv"), ys, {"class"});
            write_csv(path("target_x.csv"), d.target.data(), {"x1", "x2"});
            write_csv(path("target_y_heldout.csv"), yt, {"class"});
        } else if (which == "overpenalization") {
            const auto d = gen_overpenalization(seed, n > 0 ? n : 1000000);
            write_csv(path("p.csv"), d.p.data(), {"x"});
            write_csv(path("q_left.csv"), d.q_left.data(), {"x"});
            write_csv(path("q_right.csv"), d.q_right.data(), {"x"});
        } else {
            const Eigen::Index k = n > 0 ? n : 50, d = 2, t = 40;
            const auto doms = gen_multidomain_ts(seed, 6, k, d, t, RhoMap::linear_offset(2, d, 1.0, 0.1));
            Json spec{{"domains", Json::array()}};
            for (std::size_t i = 0; i < doms.size(); ++i) {
                Json files = Json::array();
                for (Eigen::Index f = 0; f < d; ++f) {
                    Matrix m(k, t);
                    for (Eigen::Index r = 0; r < k; ++r) m.row(r) = doms[i].series[static_cast<std::size_t>(r)].row(f);
                    const std::string name = "domain" + std::to_string(i) + "_f" + std::to_string(f) + ".csv";
                    write_csv(path(name), m);
                    files.push_back(name);
                }
                spec["domains"].push_back({{"name", "domain" + std::to_string(i)},
                                           {"rho", vector_to_json(doms[i].rho)},
                                           {"files", files}});
            }
            write_json(path("domains.json"), spec);
        }
    });

    // run -------------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Run a named experiment and write its report");
    ExperimentConfig ec;
    std::string param, values;
    std::vector<std::string> knobs;
    run_cmd->add_option("experiment", ec.experiment, "toy-mann | overpenalization | bounds-demo | dipals-synth | "
                                                     "scitsm-synth | sweep")
        ->required();
    run_cmd->add_option("--seed", seed, "Random seed");
    run_cmd->add_option("--out", out_dir, "Report directory (stdout when omitted)");
    run_cmd->add_option("--param", param, "Sweep parameter: m | hidden | lambda");
    run_cmd->add_option("--values", values, "Sweep values: a..b or a comma list");
    run_cmd->add_option("--knob", knobs, "Experiment setting name=value (repeatable)");
    run_cmd->callback([&] {
        ec.seed = seed;
        ec.sweep_param = param;
        if (!values.empty()) ec.sweep_values = parse_values(values);
        for (const auto& kv : knobs) {
            const auto eq = kv.find('=');
            require(eq != std::string::npos && eq > 0, "knob must look like name=value");
            try {
                ec.knobs[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            } catch (const std::logic_error&) {
                throw std::invalid_argument("knob value is not a number: " + kv);
            }
        }
        const auto& names = experiment_names();
        if (std::find(names.begin(), names.end(), ec.experiment) == names.end())
            throw std::invalid_argument("unknown experiment '" + ec.experiment + "'");
        code = report_exit(run(ec), out_dir);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return code;
}
