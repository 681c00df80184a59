#pragma once

#include "momentda/common.hpp"
#include "momentda/moment_metrics.hpp"
#include "momentda/rng.hpp"
#include "momentda/sample.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace momentda {

/// Weights of a single-hidden-layer classifier
/// x -> softmax(W1 sigm(W0 x + b0) + b1).
struct NetParams {
    Matrix w0;  // hidden x input
    Vector b0;
    Matrix w1;  // classes x hidden
    Vector b1;

    static NetParams zeros(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes);
    /// Uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out)) per layer; biases zero.
    static NetParams glorot(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes, CounterRng& rng);

    Eigen::Index inputs() const { return w0.cols(); }
    Eigen::Index hidden() const { return w0.rows(); }
    Eigen::Index classes() const { return w1.rows(); }
    Eigen::Index size() const { return w0.size() + b0.size() + w1.size() + b1.size(); }

    /// Concatenation of W0, b0, W1, b1 (matrices column-major).
    Vector flatten() const;
    void assign(const Vector& flat);
    bool same_shape(const NetParams& other) const;
    bool finite() const;
    void validate() const;

    NetParams& operator+=(const NetParams& other);
    NetParams& operator*=(double s);
};

NetParams operator+(NetParams a, const NetParams& b);
NetParams operator*(double s, NetParams a);

/// Inputs with row-stochastic soft or one-hot labels.
struct LabeledBatch {
    Sample inputs;
    Matrix labels;  // n x c

    LabeledBatch(Sample x, Matrix y);
    static LabeledBatch one_hot(Sample x, const std::vector<int>& classes, int num_classes);

    Eigen::Index rows() const { return inputs.rows(); }
    Eigen::Index classes() const { return labels.cols(); }
    LabeledBatch select_rows(const std::vector<Eigen::Index>& idx) const;
};

enum class OptimizerKind { kSgd, kAdagrad, kAdadelta };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

struct TrainConfig {
    Eigen::Index hidden_width = 15;
    int cmd_order = kDefaultCmdOrder;
    double reg_weight = 1.0;       // lambda
    Eigen::Index batch_size = 64;
    long max_iters = 10000;
    OptimizerKind optimizer = OptimizerKind::kAdadelta;
    double learning_rate = 1.0;    // alpha
    double decay = 0.95;           // adadelta omega
    double epsilon = 1e-6;
    std::uint64_t rng_seed = 42;
    /// Optional CMD weights; ones when empty. Hidden activations live in [0, 1],
    /// for which unit weights coincide with default_weights(0, 1, m).
    std::vector<double> cmd_weights;

    void validate() const;
    CmdWeights weights() const;
};

/// Per-parameter accumulators of the adaptive learning-rate rules.
struct OptimizerState {
    Vector z;  // squared-gradient accumulator
    Vector v;  // squared-update accumulator (adadelta)
    long iteration = 0;

    static OptimizerState init(OptimizerKind kind, Eigen::Index size);
};

struct ForwardResult {
    Matrix hidden;  // n x w
    Matrix probs;   // n x c
};

ForwardResult forward(const NetParams& params, const Sample& x);

/// Index of the largest probability per row; ties go to the lowest index.
std::vector<int> predict_classes(const NetParams& params, const Sample& x);
std::vector<int> argmax_rows(const Matrix& m);
double accuracy(const NetParams& params, const Sample& x, const Matrix& labels);

/// Mean cross-entropy of the batch.
double ce_loss(const NetParams& params, const LabeledBatch& batch);
/// Analytic gradient of the mean cross-entropy.
NetParams ce_grad(const NetParams& params, const LabeledBatch& batch, double* loss = nullptr);

/// cmd_m between the hidden activations of two batches.
double hidden_cmd(const NetParams& params, const Sample& xs, const Sample& xt, int m, const CmdWeights& weights);
/// Gradient of hidden_cmd with respect to (W0, b0); the output-layer blocks are zero.
/// Terms whose moment difference has norm below 1e-12 contribute zero.
NetParams cmd_grad(const NetParams& params, const Sample& xs, const Sample& xt, int m, const CmdWeights& weights);

/// One update theta <- theta - alpha * nu (.) grad under the configured rule.
void optimizer_step(OptimizerState& state, NetParams& params, const NetParams& grad, const TrainConfig& config);

struct TrainResult {
    NetParams params;
    std::vector<double> loss;  // cross-entropy per iteration on the source batch
};

/// Minibatch descent on CE + lambda * cmd_m(h0(source), h0(target)).
/// Starts from `init` when given, otherwise from a seeded Glorot draw.
/// Throws DivergenceError on a non-finite loss.
TrainResult train(const TrainConfig& config, const LabeledBatch& source, const Sample& target,
                  const NetParams* init = nullptr);

/// Plain supervised minibatch descent (no target domain).
TrainResult train_supervised(const TrainConfig& config, const LabeledBatch& source, const NetParams* init = nullptr);

struct ReverseValidationSplit {
    Eigen::Index train_rows;
    Eigen::Index validation_rows;
};

ReverseValidationSplit split_sizes(Eigen::Index rows, double split);

/// Error of the reverse classifier (trained on pseudo-labelled target data with
/// the source as its target domain) on held-out labelled source rows.
double reverse_validation(const TrainConfig& config, const LabeledBatch& source, const Sample& target, double split);

}  // namespace momentda
