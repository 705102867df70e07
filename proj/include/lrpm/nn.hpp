#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrpm/encoding.hpp"
#include "lrpm/rng.hpp"

namespace lrpm::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint32_t { Identity = 0, Relu = 1 };

/// A trainable tensor seen as flat storage plus its gradient accumulator.
struct ParamView {
    std::span<double> values;
    std::span<double> grads;
    bool decays = true;  // false for biases
};

/// Feed-forward network over column batches (one sample per column).
class Network {
public:
    virtual ~Network() = default;

    virtual int input_dim() const = 0;
    virtual int output_dim() const = 0;

    virtual Matrix forward(const Matrix& batch) const = 0;
    /// Forward pass that keeps the activations needed by backward().
    virtual Matrix forward_train(const Matrix& batch) = 0;
    /// Accumulates parameter gradients for the last forward_train() batch.
    virtual void backward(const Matrix& output_grad) = 0;

    virtual std::vector<ParamView> parameters() = 0;
    virtual std::unique_ptr<Network> clone() const = 0;
    /// Which ReLU units are active for `batch`; empty when the network has none to report.
    virtual std::vector<bool> relu_pattern(const Matrix& /*batch*/) const { return {}; }

    void zero_grad();
    std::size_t parameter_count();
    std::vector<double> snapshot();
    void restore(std::span<const double> flat);
    bool finite();
};

struct DenseLayer {
    Matrix weights;  // out x in
    Vector biases;
    Activation activation = Activation::Identity;
    Matrix grad_weights;
    Vector grad_biases;
};

class Mlp final : public Network {
public:
    Mlp() = default;
    /// dims = {input, hidden..., output}. Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    Mlp(std::span<const int> dims, Activation hidden, Activation output, Rng& rng);
    explicit Mlp(std::vector<DenseLayer> layers);

    int input_dim() const override;
    int output_dim() const override;
    Matrix forward(const Matrix& batch) const override;
    Matrix forward_train(const Matrix& batch) override;
    std::vector<bool> relu_pattern(const Matrix& batch) const override;
    void backward(const Matrix& output_grad) override;
    std::vector<ParamView> parameters() override;
    std::unique_ptr<Network> clone() const override;

    Vector forward(std::span<const double> x) const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    /// Gradient with respect to the input of the last forward_train() batch.
    const Matrix& input_grad() const { return input_grad_; }

private:
    std::vector<DenseLayer> layers_;
    std::vector<Matrix> inputs_;
    std::vector<Matrix> outputs_;
    Matrix input_grad_;
};

Vector softmax(std::span<const double> logits);

struct SampleLoss {
    double loss = 0.0;
    Vector grad;
};

/// Sum over one-hot blocks of -log softmax(block)[argmax(target block)]; binary
/// blocks use the logistic likelihood. Blocks whose mask bit is 0 in the target
/// are skipped.
SampleLoss multihot_nll_loss(std::span<const double> logits, std::span<const double> target,
                             const MultihotLayout& layout);
SampleLoss softmax_ce_loss(std::span<const double> logits, int label);
/// Mean of squared differences; gradient 2(a - b) / n with respect to `a`.
SampleLoss mse_loss(std::span<const double> a, std::span<const double> b);

struct LossValue {
    double loss = 0.0;  // mean over the batch
    Matrix grad;        // d(mean loss) / d(outputs)
};

class Loss {
public:
    virtual ~Loss() = default;
    virtual LossValue evaluate(const Matrix& outputs, const Matrix& targets) const = 0;
    virtual std::string name() const = 0;
};

class MultihotNll final : public Loss {
public:
    explicit MultihotNll(MultihotLayout layout) : layout_(std::move(layout)) {}
    LossValue evaluate(const Matrix& outputs, const Matrix& targets) const override;
    std::string name() const override { return "multihot_nll"; }

private:
    MultihotLayout layout_;
};

/// Targets are a 1 x n row of class labels.
class CrossEntropy final : public Loss {
public:
    LossValue evaluate(const Matrix& outputs, const Matrix& targets) const override;
    std::string name() const override { return "cross_entropy"; }
};

class MeanSquared final : public Loss {
public:
    LossValue evaluate(const Matrix& outputs, const Matrix& targets) const override;
    std::string name() const override { return "mse"; }
};

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 64;
    int max_epochs = 100;
    int patience = 10;
    OptimizerKind optimizer = OptimizerKind::Adam;
    std::uint64_t seed = 0;
    /// Decoupled weight decay applied to weight matrices at every step.
    double weight_decay = 0.0;
    /// Called after every epoch with (epoch, train loss, monitored loss).
    std::function<void(int, double, double)> on_epoch;

    void validate() const;
};

struct TrainData {
    Matrix inputs;   // dim x n
    Matrix targets;  // target dim x n
    int size() const { return static_cast<int>(inputs.cols()); }
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    int best_epoch = -1;
    bool early_stopped = false;
};

/// Minibatch training with a fixed-seed shuffle. Tracks the validation loss (the
/// training loss when no validation set is given), stops after `patience`
/// epochs without improvement and leaves the best parameters in `net`.
/// Throws NonFiniteLoss when a batch loss is NaN or infinite.
TrainHistory train(Network& net, const TrainData& data, const TrainData* validation, const Loss& loss,
                   const TrainConfig& cfg);

double evaluate_loss(const Network& net, const TrainData& data, const Loss& loss, int batch_size = 512);

struct GradCheckResult {
    double worst = 0.0;  // max |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)
    long checked = 0;
    long skipped = 0;    // the +-epsilon probes changed the ReLU pattern, so the difference spans a kink
};

/// Compares backward() against central differences for every parameter.
GradCheckResult grad_check_report(Network& net, const Loss& loss, const Matrix& input, const Matrix& target,
                                  double epsilon = 1e-5);
/// grad_check_report(...).worst
double grad_check(Network& net, const Loss& loss, const Matrix& input, const Matrix& target, double epsilon = 1e-5);

Matrix forward_chunked(const Network& net, const Matrix& inputs, int chunk = 1024);

}  // namespace lrpm::nn
