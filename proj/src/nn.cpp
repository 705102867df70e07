#include "lrpm/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lrpm/errors.hpp"

namespace lrpm::nn {

// ---------------------------------------------------------------------------
// Network

void Network::zero_grad() {
    for (auto& p : parameters()) std::fill(p.grads.begin(), p.grads.end(), 0.0);
}

std::size_t Network::parameter_count() {
    std::size_t n = 0;
    for (auto& p : parameters()) n += p.values.size();
    return n;
}

std::vector<double> Network::snapshot() {
    std::vector<double> flat;
    for (auto& p : parameters()) flat.insert(flat.end(), p.values.begin(), p.values.end());
    return flat;
}

void Network::restore(std::span<const double> flat) {
    std::size_t at = 0;
    for (auto& p : parameters()) {
        if (at + p.values.size() > flat.size()) throw DimensionMismatch("parameter snapshot too short");
        std::copy_n(flat.begin() + static_cast<long>(at), p.values.size(), p.values.begin());
        at += p.values.size();
    }
    if (at != flat.size()) throw DimensionMismatch("parameter snapshot too long");
}

bool Network::finite() {
    for (auto& p : parameters()) {
        for (double v : p.values) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Mlp

namespace {

void apply_activation(Matrix& m, Activation act) {
    if (act == Activation::Relu) m = m.cwiseMax(0.0);
}

}  // namespace

Mlp::Mlp(std::span<const int> dims, Activation hidden, Activation output, Rng& rng) {
    if (dims.size() < 2) throw UsageError("an MLP needs at least input and output dimensions");
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const int in = dims[i];
        const int out = dims[i + 1];
        if (in <= 0 || out <= 0) throw UsageError("layer dimensions must be positive");
        DenseLayer layer;
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        layer.weights.resize(out, in);
        for (Eigen::Index c = 0; c < in; ++c) {
            for (Eigen::Index r = 0; r < out; ++r) layer.weights(r, c) = rng.uniform(-limit, limit);
        }
        layer.biases = Vector::Zero(out);
        layer.activation = i + 2 == dims.size() ? output : hidden;
        layer.grad_weights = Matrix::Zero(out, in);
        layer.grad_biases = Vector::Zero(out);
        layers_.push_back(std::move(layer));
    }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw UsageError("an MLP needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto& l = layers_[i];
        if (l.biases.size() != l.weights.rows()) throw DimensionMismatch("bias length differs from layer width");
        if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows()) {
            throw DimensionMismatch("layer " + std::to_string(i) + " does not chain with its predecessor");
        }
        l.grad_weights = Matrix::Zero(l.weights.rows(), l.weights.cols());
        l.grad_biases = Vector::Zero(l.biases.size());
    }
}

int Mlp::input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols()); }
int Mlp::output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows()); }

Matrix Mlp::forward(const Matrix& batch) const {
    if (batch.rows() != input_dim()) {
        throw DimensionMismatch("MLP expects inputs of " + std::to_string(input_dim()) + " rows, got " +
                                std::to_string(batch.rows()));
    }
    Matrix x = batch;
    for (const auto& l : layers_) {
        Matrix y = l.weights * x;
        y.colwise() += l.biases;
        apply_activation(y, l.activation);
        x = std::move(y);
    }
    return x;
}

std::vector<bool> Mlp::relu_pattern(const Matrix& batch) const {
    std::vector<bool> pattern;
    Matrix x = batch;
    for (const auto& l : layers_) {
        Matrix y = l.weights * x;
        y.colwise() += l.biases;
        if (l.activation == Activation::Relu) {
            for (Eigen::Index k = 0; k < y.size(); ++k) pattern.push_back(y.data()[k] > 0.0);
        }
        apply_activation(y, l.activation);
        x = std::move(y);
    }
    return pattern;
}

Vector Mlp::forward(std::span<const double> x) const {
    const Eigen::Map<const Vector> in(x.data(), static_cast<Eigen::Index>(x.size()));
    return forward(Matrix(in)).col(0);
}

Matrix Mlp::forward_train(const Matrix& batch) {
    if (batch.rows() != input_dim()) throw DimensionMismatch("MLP input dimension mismatch");
    inputs_.assign(layers_.size(), Matrix());
    outputs_.assign(layers_.size(), Matrix());
    Matrix x = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        Matrix y = l.weights * x;
        y.colwise() += l.biases;
        apply_activation(y, l.activation);
        inputs_[i] = std::move(x);
        outputs_[i] = y;
        x = std::move(y);
    }
    return x;
}

void Mlp::backward(const Matrix& output_grad) {
    if (inputs_.size() != layers_.size()) throw UsageError("backward() called without forward_train()");
    Matrix g = output_grad;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        auto& l = layers_[k];
        if (l.activation == Activation::Relu) {
            g = g.cwiseProduct((outputs_[k].array() > 0.0).cast<double>().matrix());
        }
        l.grad_weights.noalias() += g * inputs_[k].transpose();
        l.grad_biases += g.rowwise().sum();
        g = l.weights.transpose() * g;
    }
    input_grad_ = std::move(g);
}

std::vector<ParamView> Mlp::parameters() {
    std::vector<ParamView> out;
    for (auto& l : layers_) {
        out.push_back({{l.weights.data(), static_cast<std::size_t>(l.weights.size())},
                       {l.grad_weights.data(), static_cast<std::size_t>(l.grad_weights.size())}});
        out.push_back({{l.biases.data(), static_cast<std::size_t>(l.biases.size())},
                       {l.grad_biases.data(), static_cast<std::size_t>(l.grad_biases.size())},
                       false});
    }
    return out;
}

std::unique_ptr<Network> Mlp::clone() const {
    auto copy = std::make_unique<Mlp>(layers_);
    return copy;
}

// ---------------------------------------------------------------------------
// Losses

Vector softmax(std::span<const double> logits) {
    const Eigen::Map<const Vector> z(logits.data(), static_cast<Eigen::Index>(logits.size()));
    const double m = z.maxCoeff();
    Vector e = (z.array() - m).exp();
    return e / e.sum();
}

namespace {

// -log softmax(z)[label] and its gradient written into `grad`.
double block_nll(const double* z, int width, int label, double* grad) {
    double m = z[0];
    for (int i = 1; i < width; ++i) m = std::max(m, z[i]);
    double sum = 0.0;
    for (int i = 0; i < width; ++i) sum += std::exp(z[i] - m);
    const double log_sum = m + std::log(sum);
    for (int i = 0; i < width; ++i) grad[i] = std::exp(z[i] - log_sum) - (i == label ? 1.0 : 0.0);
    return log_sum - z[label];
}

// Logistic NLL of a single logit; stable for large |z|.
double binary_nll(double z, double target, double* grad) {
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    *grad = p - target;
    const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    return softplus - target * z;
}

double multihot_sample(const double* logits, const double* target, const MultihotLayout& layout, double* grad) {
    double loss = 0.0;
    for (const auto& block : layout.blocks) {
        if (block.mask_index >= 0 && target[block.mask_index] < 0.5) continue;
        const int off = block.offset;
        if (block.kind == BlockKind::Binary) {
            loss += binary_nll(logits[off], target[off] >= 0.5 ? 1.0 : 0.0, grad + off);
        } else {
            const int label = static_cast<int>(std::max_element(target + off, target + off + block.width) - (target + off));
            loss += block_nll(logits + off, block.width, label, grad + off);
        }
    }
    return loss;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch(std::string(what) + ": output and target shapes differ");
    }
}

}  // namespace

SampleLoss multihot_nll_loss(std::span<const double> logits, std::span<const double> target,
                             const MultihotLayout& layout) {
    if (static_cast<int>(logits.size()) != layout.dim || target.size() != logits.size()) {
        throw DimensionMismatch("multihot loss expects vectors of length " + std::to_string(layout.dim));
    }
    SampleLoss out;
    out.grad = Vector::Zero(layout.dim);
    out.loss = multihot_sample(logits.data(), target.data(), layout, out.grad.data());
    return out;
}

SampleLoss softmax_ce_loss(std::span<const double> logits, int label) {
    if (label < 0 || label >= static_cast<int>(logits.size())) throw UsageError("class label out of range");
    SampleLoss out;
    out.grad = Vector::Zero(static_cast<Eigen::Index>(logits.size()));
    out.loss = block_nll(logits.data(), static_cast<int>(logits.size()), label, out.grad.data());
    return out;
}

SampleLoss mse_loss(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch("mse operands differ in length");
    if (a.empty()) throw DimensionMismatch("mse of empty vectors");
    const Eigen::Map<const Vector> x(a.data(), static_cast<Eigen::Index>(a.size()));
    const Eigen::Map<const Vector> y(b.data(), static_cast<Eigen::Index>(b.size()));
    const double n = static_cast<double>(a.size());
    SampleLoss out;
    const Vector d = x - y;
    out.loss = d.squaredNorm() / n;
    out.grad = 2.0 * d / n;
    return out;
}

LossValue MultihotNll::evaluate(const Matrix& outputs, const Matrix& targets) const {
    require_same_shape(outputs, targets, "multihot loss");
    if (outputs.rows() != layout_.dim) throw DimensionMismatch("multihot loss: wrong output dimension");
    LossValue out;
    out.grad = Matrix::Zero(outputs.rows(), outputs.cols());
    const double n = static_cast<double>(outputs.cols());
    for (Eigen::Index j = 0; j < outputs.cols(); ++j) {
        out.loss += multihot_sample(outputs.col(j).data(), targets.col(j).data(), layout_, out.grad.col(j).data());
    }
    out.loss /= n;
    out.grad /= n;
    return out;
}

LossValue CrossEntropy::evaluate(const Matrix& outputs, const Matrix& targets) const {
    if (targets.rows() != 1 || targets.cols() != outputs.cols()) {
        throw DimensionMismatch("cross entropy expects a 1 x n label row");
    }
    LossValue out;
    out.grad = Matrix::Zero(outputs.rows(), outputs.cols());
    const double n = static_cast<double>(outputs.cols());
    const int width = static_cast<int>(outputs.rows());
    for (Eigen::Index j = 0; j < outputs.cols(); ++j) {
        const int label = static_cast<int>(targets(0, j));
        if (label < 0 || label >= width) throw UsageError("class label out of range");
        out.loss += block_nll(outputs.col(j).data(), width, label, out.grad.col(j).data());
    }
    out.loss /= n;
    out.grad /= n;
    return out;
}

LossValue MeanSquared::evaluate(const Matrix& outputs, const Matrix& targets) const {
    require_same_shape(outputs, targets, "mse");
    const double n = static_cast<double>(outputs.cols());
    const double d = static_cast<double>(outputs.rows());
    const Matrix diff = outputs - targets;
    return {diff.squaredNorm() / (n * d), 2.0 * diff / (n * d)};
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be >= 0");
    if (batch_size < 1) throw UsageError("batch size must be at least 1");
    if (max_epochs < 0) throw UsageError("max_epochs must be non-negative");
    if (patience < 1) throw UsageError("patience must be at least 1");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw UsageError("weight decay must be >= 0");
}

namespace {

class Optimizer {
public:
    Optimizer(OptimizerKind kind, double lr, double decay, std::vector<ParamView> params)
        : kind_(kind), lr_(lr), decay_(decay), params_(std::move(params)) {
        if (kind_ == OptimizerKind::Adam) {
            for (const auto& p : params_) {
                m_.emplace_back(p.values.size(), 0.0);
                v_.emplace_back(p.values.size(), 0.0);
            }
        }
    }

    void step() {
        if (decay_ > 0.0) {
            for (auto& p : params_) {
                if (!p.decays) continue;
                for (auto& w : p.values) w -= lr_ * decay_ * w;
            }
        }
        if (kind_ == OptimizerKind::Sgd) {
            for (auto& p : params_) {
                for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] -= lr_ * p.grads[i];
            }
            return;
        }
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, t_);
        const double c2 = 1.0 - std::pow(beta2, t_);
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = params_[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.values.size(); ++i) {
                const double g = p.grads[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                p.values[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        }
    }

private:
    OptimizerKind kind_;
    double lr_;
    double decay_;
    std::vector<ParamView> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    int t_ = 0;
};

}  // namespace

Matrix forward_chunked(const Network& net, const Matrix& inputs, int chunk) {
    Matrix out(net.output_dim(), inputs.cols());
    for (Eigen::Index start = 0; start < inputs.cols(); start += chunk) {
        const Eigen::Index len = std::min<Eigen::Index>(chunk, inputs.cols() - start);
        out.middleCols(start, len) = net.forward(inputs.middleCols(start, len));
    }
    return out;
}

double evaluate_loss(const Network& net, const TrainData& data, const Loss& loss, int batch_size) {
    if (data.size() == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index start = 0; start < data.inputs.cols(); start += batch_size) {
        const Eigen::Index len = std::min<Eigen::Index>(batch_size, data.inputs.cols() - start);
        const auto value = loss.evaluate(net.forward(data.inputs.middleCols(start, len)),
                                         data.targets.middleCols(start, len));
        total += value.loss * static_cast<double>(len);
    }
    return total / static_cast<double>(data.size());
}

TrainHistory train(Network& net, const TrainData& data, const TrainData* validation, const Loss& loss,
                   const TrainConfig& cfg) {
    cfg.validate();
    if (data.size() == 0) throw UsageError("training data is empty");
    if (data.inputs.rows() != net.input_dim()) throw DimensionMismatch("training inputs do not match the network");
    if (data.targets.cols() != data.inputs.cols()) throw DimensionMismatch("inputs and targets differ in count");

    Rng rng(cfg.seed);
    Optimizer optimizer(cfg.optimizer, cfg.learning_rate, cfg.weight_decay, net.parameters());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    TrainHistory history;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = net.snapshot();
    int stale = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(std::span<Eigen::Index>(order));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
            const std::vector<Eigen::Index> idx(order.begin() + static_cast<long>(start),
                                                order.begin() + static_cast<long>(start + len));
            const Matrix x = data.inputs(Eigen::all, idx);
            const Matrix y = data.targets(Eigen::all, idx);
            net.zero_grad();
            const Matrix out = net.forward_train(x);
            const auto value = loss.evaluate(out, y);
            if (!std::isfinite(value.loss)) {
                throw NonFiniteLoss(loss.name() + " became non-finite at epoch " + std::to_string(epoch) +
                                    ", batch starting at " + std::to_string(start));
            }
            net.backward(value.grad);
            optimizer.step();
            epoch_loss += value.loss * static_cast<double>(len);
        }
        history.train_loss.push_back(epoch_loss / static_cast<double>(data.size()));
        double monitored = history.train_loss.back();
        if (validation != nullptr && validation->size() > 0) {
            monitored = evaluate_loss(net, *validation, loss);
            history.validation_loss.push_back(monitored);
        }
        if (!std::isfinite(monitored)) throw NonFiniteLoss("validation loss became non-finite at epoch " + std::to_string(epoch));
        if (cfg.on_epoch) cfg.on_epoch(epoch, history.train_loss.back(), monitored);
        if (monitored < best) {
            best = monitored;
            best_params = net.snapshot();
            history.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            history.early_stopped = true;
            break;
        }
    }
    net.restore(best_params);
    return history;
}

GradCheckResult grad_check_report(Network& net, const Loss& loss, const Matrix& input, const Matrix& target,
                                  double epsilon) {
    if (!(epsilon > 0.0)) throw UsageError("grad_check epsilon must be positive");
    net.zero_grad();
    const auto value = loss.evaluate(net.forward_train(input), target);
    net.backward(value.grad);

    GradCheckResult result;
    for (auto& p : net.parameters()) {
        const std::vector<double> analytic(p.grads.begin(), p.grads.end());
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            const double saved = p.values[i];
            p.values[i] = saved + epsilon;
            const double plus = loss.evaluate(net.forward(input), target).loss;
            const auto plus_pattern = net.relu_pattern(input);
            p.values[i] = saved - epsilon;
            const double minus = loss.evaluate(net.forward(input), target).loss;
            const auto minus_pattern = net.relu_pattern(input);
            p.values[i] = saved;
            if (plus_pattern != minus_pattern) {
                ++result.skipped;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * epsilon);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
            result.worst = std::max(result.worst, std::abs(analytic[i] - numeric) / denom);
            ++result.checked;
        }
    }
    return result;
}

double grad_check(Network& net, const Loss& loss, const Matrix& input, const Matrix& target, double epsilon) {
    return grad_check_report(net, loss, input, target, epsilon).worst;
}

}  // namespace lrpm::nn
