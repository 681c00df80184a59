#include "momentda/serialize.hpp"

#include <fstream>
#include <stdexcept>

namespace momentda {

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    require(j.is_array(), "matrix must be an array of rows");
    if (j.empty()) return Matrix(0, 0);
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, "ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const Json& j) {
    require(j.is_array(), "vector must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

namespace {

// Row-major flat array.
Json flat(const Matrix& m) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
    return a;
}

Matrix unflat(const Json& a, Eigen::Index rows, Eigen::Index cols) {
    require(a.is_array() && static_cast<Eigen::Index>(a.size()) == rows * cols, "flat array does not match its shape");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a[static_cast<std::size_t>(i * cols + j)].get<double>();
    return m;
}

}  // namespace

Json to_json(const NetParams& p) {
    return Json{{"kind", "mann"},
                {"inputs", p.inputs()},
                {"hidden", p.hidden()},
                {"classes", p.classes()},
                {"layout", "row-major; w0 is hidden x inputs, w1 is classes x hidden"},
                {"w0", flat(p.w0)},
                {"b0", flat(p.b0.transpose())},
                {"w1", flat(p.w1)},
                {"b1", flat(p.b1.transpose())}};
}

NetParams net_params_from_json(const Json& j) {
    const auto d = j.at("inputs").get<Eigen::Index>();
    const auto w = j.at("hidden").get<Eigen::Index>();
    const auto c = j.at("classes").get<Eigen::Index>();
    require(d >= 1 && w >= 1 && c >= 1, "network shape must be positive");
    NetParams p;
    p.w0 = unflat(j.at("w0"), w, d);
    p.b0 = unflat(j.at("b0"), w, 1);
    p.w1 = unflat(j.at("w1"), c, w);
    p.b1 = unflat(j.at("b1"), c, 1);
    p.validate();
    return p;
}

Json to_json(const DiplsModel& m) {
    Json comps = Json::array();
    for (const auto& c : m.components)
        comps.push_back({{"gamma", c.gamma},
                         {"gamma_warning", c.gamma_warning},
                         {"variance_difference", c.variance_difference},
                         {"regularizer", c.regularizer},
                         {"target_loading_denominator", c.target_loading_denominator},
                         {"source_norm", c.source_norm}});
    return Json{{"kind", "dipals"},
                {"weights", matrix_to_json(m.weights)},
                {"loadings", matrix_to_json(m.loadings)},
                {"inner", vector_to_json(m.inner)},
                {"coef", vector_to_json(m.coef)},
                {"x_mean_source", vector_to_json(m.x_mean_source)},
                {"x_mean_target", vector_to_json(m.x_mean_target)},
                {"y_mean", m.y_mean},
                {"components", comps},
                {"warnings", m.warnings}};
}

DiplsModel dipals_model_from_json(const Json& j) {
    DiplsModel m;
    m.weights = matrix_from_json(j.at("weights"));
    m.loadings = matrix_from_json(j.at("loadings"));
    m.inner = vector_from_json(j.at("inner"));
    m.coef = vector_from_json(j.at("coef"));
    m.x_mean_source = vector_from_json(j.at("x_mean_source"));
    m.x_mean_target = vector_from_json(j.at("x_mean_target"));
    m.y_mean = j.at("y_mean").get<double>();
    for (const auto& c : j.value("components", Json::array())) {
        DiplsComponent d;
        d.gamma = c.value("gamma", 0.0);
        d.gamma_warning = c.value("gamma_warning", false);
        d.variance_difference = c.value("variance_difference", 0.0);
        d.regularizer = c.value("regularizer", 0.0);
        d.target_loading_denominator = c.value("target_loading_denominator", 0.0);
        d.source_norm = c.value("source_norm", 0.0);
        m.components.push_back(d);
    }
    m.warnings = j.value("warnings", std::vector<std::string>{});
    require(m.coef.size() == m.x_mean_source.size() && m.coef.allFinite(), "malformed dipals model");
    return m;
}

Json to_json(const CorrectionModel& m) {
    Json theta = Json::array(), bias = Json::array();
    for (const auto& t : m.theta) theta.push_back(matrix_to_json(t));
    for (const auto& b : m.bias) bias.push_back(vector_to_json(b));
    const auto& c = m.config;
    return Json{{"kind", "scitsm"},
                {"steps", m.steps},
                {"anchors", m.anchors},
                {"theta", theta},
                {"bias", bias},
                {"config",
                 {{"anchors", c.anchors},
                  {"alpha", c.alpha},
                  {"beta", c.beta},
                  {"delta", c.delta},
                  {"window", c.window},
                  {"squared_data_term", c.squared_data_term},
                  {"max_iter", c.max_iter},
                  {"tol", c.tol}}},
                {"converged", m.converged},
                {"iterations", m.iterations},
                {"objective", m.objective}};
}

CorrectionModel correction_model_from_json(const Json& j) {
    CorrectionModel m;
    m.steps = j.at("steps").get<Eigen::Index>();
    m.anchors = j.at("anchors").get<std::vector<Eigen::Index>>();
    for (const auto& t : j.at("theta")) m.theta.push_back(matrix_from_json(t));
    for (const auto& b : j.at("bias")) m.bias.push_back(vector_from_json(b));
    if (j.contains("config")) {
        const Json& c = j["config"];
        m.config.anchors = c.value("anchors", Eigen::Index{0});
        m.config.alpha = c.value("alpha", m.config.alpha);
        m.config.beta = c.value("beta", m.config.beta);
        m.config.delta = c.value("delta", m.config.delta);
        m.config.window = c.value("window", m.config.window);
        m.config.squared_data_term = c.value("squared_data_term", false);
        m.config.max_iter = c.value("max_iter", m.config.max_iter);
        m.config.tol = c.value("tol", m.config.tol);
    }
    m.converged = j.value("converged", false);
    m.iterations = j.value("iterations", 0);
    m.objective = j.value("objective", 0.0);
    require(m.anchors.size() >= 2 && m.theta.size() == m.anchors.size() && m.bias.size() == m.anchors.size(),
            "malformed scitsm model");
    for (std::size_t i = 0; i < m.anchors.size(); ++i) {
        require(m.anchors[i] >= 0 && m.anchors[i] < m.steps, "anchor outside the series");
        require(i == 0 || m.anchors[i] > m.anchors[i - 1], "anchors must increase");
        require(m.theta[i].cols() == m.bias[i].size() && m.theta[i].rows() == m.theta.front().rows(),
                "inconsistent correction shapes");
    }
    return m;
}

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace momentda
