#include "momentda/mann.hpp"

#include <algorithm>
#include <cmath>

namespace momentda {

// ---------------------------------------------------------------------------
// NetParams

NetParams NetParams::zeros(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes) {
    require(inputs >= 1 && hidden >= 1 && classes >= 1, "network dimensions must be positive");
    return {Matrix::Zero(hidden, inputs), Vector::Zero(hidden), Matrix::Zero(classes, hidden), Vector::Zero(classes)};
}

NetParams NetParams::glorot(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes, CounterRng& rng) {
    NetParams p = zeros(inputs, hidden, classes);
    const double r0 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
    const double r1 = std::sqrt(6.0 / static_cast<double>(hidden + classes));
    for (Eigen::Index j = 0; j < p.w0.cols(); ++j)
        for (Eigen::Index i = 0; i < p.w0.rows(); ++i) p.w0(i, j) = rng.uniform(-r0, r0);
    for (Eigen::Index j = 0; j < p.w1.cols(); ++j)
        for (Eigen::Index i = 0; i < p.w1.rows(); ++i) p.w1(i, j) = rng.uniform(-r1, r1);
    return p;
}

Vector NetParams::flatten() const {
    Vector flat(size());
    flat << w0.reshaped(), b0, w1.reshaped(), b1;
    return flat;
}

void NetParams::assign(const Vector& flat) {
    require(flat.size() == size(), "flat parameter vector has the wrong length");
    Eigen::Index o = 0;
    w0.reshaped() = flat.segment(o, w0.size());
    o += w0.size();
    b0 = flat.segment(o, b0.size());
    o += b0.size();
    w1.reshaped() = flat.segment(o, w1.size());
    o += w1.size();
    b1 = flat.segment(o, b1.size());
}

bool NetParams::same_shape(const NetParams& o) const {
    return w0.rows() == o.w0.rows() && w0.cols() == o.w0.cols() && b0.size() == o.b0.size() &&
           w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && b1.size() == o.b1.size();
}

bool NetParams::finite() const { return w0.allFinite() && b0.allFinite() && w1.allFinite() && b1.allFinite(); }

void NetParams::validate() const {
    require(w0.rows() >= 1 && w0.cols() >= 1 && w1.rows() >= 1, "network dimensions must be positive");
    require(b0.size() == w0.rows() && w1.cols() == w0.rows() && b1.size() == w1.rows(),
            "inconsistent network parameter shapes");
    require(finite(), "network parameters must be finite");
}

NetParams& NetParams::operator+=(const NetParams& o) {
    require(same_shape(o), "parameter shape mismatch");
    w0 += o.w0;
    b0 += o.b0;
    w1 += o.w1;
    b1 += o.b1;
    return *this;
}

NetParams& NetParams::operator*=(double s) {
    w0 *= s;
    b0 *= s;
    w1 *= s;
    b1 *= s;
    return *this;
}

NetParams operator+(NetParams a, const NetParams& b) { return a += b; }
NetParams operator*(double s, NetParams a) { return a *= s; }

// ---------------------------------------------------------------------------
// LabeledBatch

LabeledBatch::LabeledBatch(Sample x, Matrix y) : inputs(std::move(x)), labels(std::move(y)) {
    require(labels.rows() == inputs.rows(), "label rows must match input rows");
    require(labels.cols() >= 1, "labels need at least one class");
    require(labels.allFinite() && (labels.array() >= 0.0).all() && (labels.array() <= 1.0).all(),
            "label entries must lie in [0, 1]");
    for (Eigen::Index i = 0; i < labels.rows(); ++i)
        require(std::abs(labels.row(i).sum() - 1.0) <= 1e-9, "label rows must sum to one");
}

LabeledBatch LabeledBatch::one_hot(Sample x, const std::vector<int>& classes, int num_classes) {
    require(static_cast<Eigen::Index>(classes.size()) == x.rows(), "one label per row required");
    Matrix y = Matrix::Zero(x.rows(), num_classes);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        require(classes[i] >= 0 && classes[i] < num_classes, "class index out of range");
        y(static_cast<Eigen::Index>(i), classes[i]) = 1.0;
    }
    return LabeledBatch(std::move(x), std::move(y));
}

LabeledBatch LabeledBatch::select_rows(const std::vector<Eigen::Index>& idx) const {
    Matrix y(static_cast<Eigen::Index>(idx.size()), labels.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = labels.row(idx[i]);
    return LabeledBatch(inputs.select_rows(idx), std::move(y));
}

// ---------------------------------------------------------------------------
// Configuration

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "sgd") return OptimizerKind::kSgd;
    if (name == "adagrad") return OptimizerKind::kAdagrad;
    if (name == "adadelta") return OptimizerKind::kAdadelta;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected sgd, adagrad, adadelta)");
}

std::string to_string(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::kSgd:
            return "sgd";
        case OptimizerKind::kAdagrad:
            return "adagrad";
        case OptimizerKind::kAdadelta:
            return "adadelta";
    }
    return "?";
}

void TrainConfig::validate() const {
    require(hidden_width >= 1, "hidden width must be positive");
    require(cmd_order >= 1, "CMD order must be at least 1");
    require(reg_weight >= 0.0 && std::isfinite(reg_weight), "regularization weight must be >= 0");
    require(batch_size >= 1, "batch size must be positive");
    require(reg_weight == 0.0 || batch_size >= 2, "CMD regularization needs batch size >= 2");
    require(max_iters >= 0, "max_iters must be nonnegative");
    require(learning_rate > 0.0, "learning rate must be positive");
    require(decay > 0.0 && decay < 1.0, "adadelta decay must lie in (0, 1)");
    require(epsilon > 0.0, "epsilon must be positive");
    require(cmd_weights.empty() || static_cast<int>(cmd_weights.size()) == cmd_order,
            "CMD weights must have one entry per order");
}

CmdWeights TrainConfig::weights() const {
    if (cmd_weights.empty()) return CmdWeights::ones(cmd_order);
    return CmdWeights(Eigen::Map<const Vector>(cmd_weights.data(), static_cast<Eigen::Index>(cmd_weights.size())));
}

OptimizerState OptimizerState::init(OptimizerKind kind, Eigen::Index size) {
    OptimizerState s;
    switch (kind) {
        case OptimizerKind::kSgd:
            break;
        case OptimizerKind::kAdagrad:
            s.z = Vector::Ones(size);
            break;
        case OptimizerKind::kAdadelta:
            s.z = Vector::Zero(size);
            s.v = Vector::Zero(size);
            break;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Forward pass and gradients

namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Matrix hidden_layer(const NetParams& p, const Matrix& x) {
    return sigmoid((x * p.w0.transpose()).rowwise() + p.b0.transpose());
}

Matrix log_softmax_rows(const Matrix& logits) {
    const Vector peak = logits.rowwise().maxCoeff();
    const Matrix shifted = logits.colwise() - peak;
    const Vector lse = shifted.array().exp().rowwise().sum().log().matrix();
    return shifted.colwise() - lse;
}

void check_input(const NetParams& p, const Sample& x) {
    require(x.cols() == p.inputs(), "input has " + std::to_string(x.cols()) + " columns, network expects " +
                                        std::to_string(p.inputs()));
}

}  // namespace

ForwardResult forward(const NetParams& params, const Sample& x) {
    check_input(params, x);
    ForwardResult r;
    r.hidden = hidden_layer(params, x.data());
    const Matrix logits = (r.hidden * params.w1.transpose()).rowwise() + params.b1.transpose();
    r.probs = log_softmax_rows(logits).array().exp().matrix();
    return r;
}

std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < m.cols(); ++j)
            if (m(i, j) > m(i, best)) best = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

std::vector<int> predict_classes(const NetParams& params, const Sample& x) {
    return argmax_rows(forward(params, x).probs);
}

double accuracy(const NetParams& params, const Sample& x, const Matrix& labels) {
    require(labels.rows() == x.rows(), "label rows must match input rows");
    require(labels.cols() == params.classes(), "label columns must match the number of classes");
    const auto pred = predict_classes(params, x);
    const auto truth = argmax_rows(labels);
    long hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double ce_loss(const NetParams& params, const LabeledBatch& batch) {
    check_input(params, batch.inputs);
    require(batch.classes() == params.classes(), "label columns must match the number of classes");
    const Matrix h = hidden_layer(params, batch.inputs.data());
    const Matrix logits = (h * params.w1.transpose()).rowwise() + params.b1.transpose();
    const Matrix logp = log_softmax_rows(logits);
    return -(batch.labels.cwiseProduct(logp)).sum() / static_cast<double>(batch.rows());
}

NetParams ce_grad(const NetParams& params, const LabeledBatch& batch, double* loss) {
    check_input(params, batch.inputs);
    require(batch.classes() == params.classes(), "label columns must match the number of classes");
    const Matrix& x = batch.inputs.data();
    const double n = static_cast<double>(batch.rows());
    const Matrix h = hidden_layer(params, x);
    const Matrix logits = (h * params.w1.transpose()).rowwise() + params.b1.transpose();
    const Matrix logp = log_softmax_rows(logits);
    if (loss) *loss = -(batch.labels.cwiseProduct(logp)).sum() / n;

    const Matrix delta_out = (logp.array().exp().matrix() - batch.labels) / n;  // n x c
    const Matrix delta_hidden =
        ((delta_out * params.w1).array() * h.array() * (1.0 - h.array())).matrix();  // n x w
    NetParams g;
    g.w1 = delta_out.transpose() * h;
    g.b1 = delta_out.colwise().sum().transpose();
    g.w0 = delta_hidden.transpose() * x;
    g.b0 = delta_hidden.colwise().sum().transpose();
    return g;
}

namespace {

constexpr double kZeroTermNorm = 1e-12;

struct HiddenMoments {
    Matrix h;                     // activations
    Vector mean;
    std::vector<Matrix> powers;   // powers[j] = (h - mean)^j, j = 0..m-1
    std::vector<Vector> central;  // central[j] = column mean of powers[j]; central[1] ~ 0
    Vector central_top;           // column mean of (h - mean)^m
};

HiddenMoments hidden_moments(const NetParams& p, const Sample& x, int m) {
    HiddenMoments r;
    r.h = hidden_layer(p, x.data());
    r.mean = r.h.colwise().mean().transpose();
    const Matrix c = r.h.rowwise() - r.mean.transpose();
    r.powers.push_back(Matrix::Ones(c.rows(), c.cols()));
    for (int j = 1; j < m; ++j) r.powers.push_back(r.powers.back().cwiseProduct(c));
    for (const auto& pw : r.powers) r.central.push_back(pw.colwise().mean().transpose());
    r.central_top = r.powers.back().cwiseProduct(c).colwise().mean().transpose();
    return r;
}

const Vector& order_moment(const HiddenMoments& hm, int j) {
    return j == static_cast<int>(hm.powers.size()) ? hm.central_top : hm.central[static_cast<std::size_t>(j)];
}

// Upstream derivative d(cmd)/dH for one domain given the per-order unit
// directions u_j (already weighted and signed).
Matrix cmd_upstream(const HiddenMoments& hm, const std::vector<Vector>& u) {
    const double n = static_cast<double>(hm.h.rows());
    Matrix up = Matrix::Zero(hm.h.rows(), hm.h.cols());
    up.rowwise() += u[0].transpose();
    for (std::size_t jj = 1; jj < u.size(); ++jj) {
        const double j = static_cast<double>(jj + 1);
        const Matrix& prev = hm.powers[jj];  // order j-1
        const Vector& prev_mean = hm.central[jj];
        up += j * ((prev.rowwise() - prev_mean.transpose()).array().rowwise() * u[jj].transpose().array()).matrix();
    }
    return up / n;
}

}  // namespace

double hidden_cmd(const NetParams& params, const Sample& xs, const Sample& xt, int m, const CmdWeights& weights) {
    check_input(params, xs);
    check_input(params, xt);
    require(weights.order() == m, "CMD weights length must equal the order m");
    const auto s = hidden_moments(params, xs, m);
    const auto t = hidden_moments(params, xt, m);
    double total = weights[0] * (s.mean - t.mean).norm();
    for (int j = 2; j <= m; ++j) total += weights[j - 1] * (order_moment(s, j) - order_moment(t, j)).norm();
    return total;
}

NetParams cmd_grad(const NetParams& params, const Sample& xs, const Sample& xt, int m, const CmdWeights& weights) {
    check_input(params, xs);
    check_input(params, xt);
    require(xs.rows() >= 2 && xt.rows() >= 2, "cmd_grad needs at least two rows per batch");
    require(weights.order() == m, "CMD weights length must equal the order m");
    const auto s = hidden_moments(params, xs, m);
    const auto t = hidden_moments(params, xt, m);

    std::vector<Vector> u;
    u.reserve(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j) {
        const Vector diff = j == 1 ? Vector(s.mean - t.mean) : Vector(order_moment(s, j) - order_moment(t, j));
        const double norm = diff.norm();
        u.push_back(norm < kZeroTermNorm ? Vector::Zero(diff.size()) : Vector(weights[j - 1] * diff / norm));
    }
    std::vector<Vector> neg_u;
    for (const auto& v : u) neg_u.push_back(-v);

    const Matrix gs = cmd_upstream(s, u).cwiseProduct(s.h.cwiseProduct((1.0 - s.h.array()).matrix()));
    const Matrix gt = cmd_upstream(t, neg_u).cwiseProduct(t.h.cwiseProduct((1.0 - t.h.array()).matrix()));

    NetParams g = NetParams::zeros(params.inputs(), params.hidden(), params.classes());
    g.w0 = gs.transpose() * xs.data() + gt.transpose() * xt.data();
    g.b0 = (gs.colwise().sum() + gt.colwise().sum()).transpose();
    return g;
}

// ---------------------------------------------------------------------------
// Optimizer

void optimizer_step(OptimizerState& state, NetParams& params, const NetParams& grad, const TrainConfig& config) {
    require(params.same_shape(grad), "gradient shape does not match the parameters");
    const Vector g = grad.flatten();
    Vector theta = params.flatten();
    switch (config.optimizer) {
        case OptimizerKind::kSgd:
            theta -= config.learning_rate * g;
            break;
        case OptimizerKind::kAdagrad: {
            if (state.z.size() != g.size()) state = OptimizerState::init(config.optimizer, g.size());
            // accumulate, then scale
            state.z.array() += g.array().square();
            theta.array() -= config.learning_rate * g.array() / state.z.array().sqrt();
            break;
        }
        case OptimizerKind::kAdadelta: {
            if (state.z.size() != g.size()) state = OptimizerState::init(config.optimizer, g.size());
            const double w = config.decay, eps = config.epsilon;
            state.z = w * state.z + (1.0 - w) * g.cwiseAbs2();
            const Vector delta =
                ((state.v.array() + eps).sqrt() / (state.z.array() + eps).sqrt() * g.array()).matrix();
            state.v = w * state.v + (1.0 - w) * delta.cwiseAbs2();
            theta -= config.learning_rate * delta;
            break;
        }
    }
    params.assign(theta);
    ++state.iteration;
}

// ---------------------------------------------------------------------------
// Training

namespace {

// Without-replacement minibatches over reshuffled epochs.
class EpochSampler {
public:
    EpochSampler(Eigen::Index n, CounterRng rng) : n_(n), rng_(rng) {}

    std::vector<Eigen::Index> next(Eigen::Index batch) {
        std::vector<Eigen::Index> out;
        out.reserve(static_cast<std::size_t>(batch));
        while (static_cast<Eigen::Index>(out.size()) < batch) {
            if (pos_ >= order_.size()) {
                order_ = rng_.permutation(n_);
                pos_ = 0;
            }
            out.push_back(order_[pos_++]);
        }
        return out;
    }

private:
    Eigen::Index n_;
    CounterRng rng_;
    std::vector<Eigen::Index> order_;
    std::size_t pos_ = 0;
};

TrainResult descend(const TrainConfig& config, const LabeledBatch& source, const Sample* target,
                    const NetParams* init) {
    config.validate();
    const CounterRng root(config.rng_seed);
    CounterRng init_rng = root.fork(1);
    TrainResult result{init ? *init
                            : NetParams::glorot(source.inputs.cols(), config.hidden_width, source.classes(), init_rng),
                       {}};
    result.params.validate();
    require(result.params.inputs() == source.inputs.cols(), "initial parameters do not match the input dimension");
    require(result.params.classes() == source.classes(), "initial parameters do not match the number of classes");

    const bool regularize = target != nullptr && config.reg_weight > 0.0;
    Eigen::Index batch = std::min(config.batch_size, source.rows());
    if (regularize) {
        require(target->cols() == source.inputs.cols(), "source and target dimensions differ");
        batch = std::min(batch, target->rows());
        require(batch >= 2, "CMD regularization needs at least two rows per domain");
    }
    EpochSampler source_batches(source.rows(), root.fork(2));
    EpochSampler target_batches(regularize ? target->rows() : 1, root.fork(3));
    const CmdWeights weights = config.weights();

    OptimizerState state = OptimizerState::init(config.optimizer, result.params.size());
    result.loss.reserve(static_cast<std::size_t>(config.max_iters));
    for (long it = 0; it < config.max_iters; ++it) {
        const LabeledBatch sb = source.select_rows(source_batches.next(batch));
        double loss = 0.0;
        NetParams grad = ce_grad(result.params, sb, &loss);
        if (!std::isfinite(loss))
            throw DivergenceError("non-finite loss at iteration " + std::to_string(it), it);
        result.loss.push_back(loss);
        if (regularize) {
            const Sample tb = target->select_rows(target_batches.next(batch));
            grad += config.reg_weight * cmd_grad(result.params, sb.inputs, tb, config.cmd_order, weights);
        }
        optimizer_step(state, result.params, grad, config);
    }
    if (!result.params.finite())
        throw DivergenceError("non-finite parameters after training", config.max_iters);
    return result;
}

}  // namespace

TrainResult train(const TrainConfig& config, const LabeledBatch& source, const Sample& target, const NetParams* init) {
    require_same_dim(source.inputs, target);
    return descend(config, source, &target, init);
}

TrainResult train_supervised(const TrainConfig& config, const LabeledBatch& source, const NetParams* init) {
    return descend(config, source, nullptr, init);
}

ReverseValidationSplit split_sizes(Eigen::Index rows, double split) {
    require(split > 0.0 && split < 1.0, "split must lie in (0, 1)");
    const auto train_rows = static_cast<Eigen::Index>(std::llround(split * static_cast<double>(rows)));
    const Eigen::Index validation_rows = rows - train_rows;
    require(train_rows >= 2 && validation_rows >= 1,
            "split leaves too few rows (" + std::to_string(train_rows) + "/" + std::to_string(validation_rows) + ")");
    return {train_rows, validation_rows};
}

double reverse_validation(const TrainConfig& config, const LabeledBatch& source, const Sample& target, double split) {
    require_same_dim(source.inputs, target);
    const auto ss = split_sizes(source.rows(), split);
    const auto ts = split_sizes(target.rows(), split);
    CounterRng rng = CounterRng(config.rng_seed).fork(17);
    const auto sp = rng.permutation(source.rows());
    const auto tp = rng.permutation(target.rows());
    const std::vector<Eigen::Index> s_train(sp.begin(), sp.begin() + ss.train_rows);
    const std::vector<Eigen::Index> s_val(sp.begin() + ss.train_rows, sp.end());
    const std::vector<Eigen::Index> t_train(tp.begin(), tp.begin() + ts.train_rows);

    const LabeledBatch s = source.select_rows(s_train);
    const LabeledBatch sv = source.select_rows(s_val);
    const Sample t = target.select_rows(t_train);

    const NetParams forward_model = train(config, s, t).params;
    const LabeledBatch pseudo =
        LabeledBatch::one_hot(t, predict_classes(forward_model, t), static_cast<int>(source.classes()));
    const NetParams reverse_model = train(config, pseudo, s.inputs).params;
    return 1.0 - accuracy(reverse_model, sv.inputs, sv.labels);
}

}  // namespace momentda
