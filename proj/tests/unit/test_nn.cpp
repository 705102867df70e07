#include <cmath>

#include "doctest.h"
#include "lrpm/errors.hpp"
#include "lrpm/nn.hpp"

using namespace lrpm;
using namespace lrpm::nn;

TEST_CASE("identity layer forwards its input") {
    DenseLayer l;
    l.weights = Matrix::Identity(4, 4);
    l.biases = Vector::Zero(4);
    Mlp net({l});
    const std::vector<double> x{1.0, -2.0, 3.5, 0.0};
    const Vector y = net.forward(std::span<const double>(x));
    for (int i = 0; i < 4; ++i) CHECK(y(i) == x[i]);
    const std::vector<double> short_input{1.0};
    CHECK_THROWS_AS(net.forward(std::span<const double>(short_input)), DimensionMismatch);
}

TEST_CASE("zero-weight net outputs the last biases") {
    Rng rng(1);
    const std::vector<int> dims{3, 5, 2};
    Mlp net(dims, Activation::Relu, Activation::Identity, rng);
    for (auto& l : net.layers()) l.weights.setZero();
    net.layers().back().biases << 0.25, -4.0;
    const std::vector<double> x{9.0, 9.0, 9.0};
    const Vector y = net.forward(std::span<const double>(x));
    CHECK(y(0) == 0.25);
    CHECK(y(1) == -4.0);
}

TEST_CASE("multihot NLL on uniform logits") {
    const auto layout = multihot_layout(Configuration::Center);
    std::vector<double> logits(21, 0.0);
    std::vector<double> target(21, 0.0);
    target[1] = target[7] = target[11] = 1.0;
    const auto r = multihot_nll_loss(logits, target, layout);
    CHECK(r.loss == doctest::Approx(std::log(5.0) + std::log(6.0) + std::log(10.0)).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(5.7038).epsilon(1e-4));
}

TEST_CASE("multihot NLL vanishes with a large margin") {
    const auto layout = multihot_layout(Configuration::Center);
    std::vector<double> logits(21, 0.0);
    std::vector<double> target(21, 0.0);
    target[1] = target[7] = target[11] = 1.0;
    logits[1] = logits[7] = logits[11] = 60.0;
    CHECK(multihot_nll_loss(logits, target, layout).loss < 1e-20);
}

TEST_CASE("multihot NLL masks unoccupied slots") {
    const auto layout = multihot_layout(Configuration::Grid2x2);
    std::vector<double> logits(88, 0.0);
    std::vector<double> target(88, 0.0);
    target[0] = 1.0;
    target[1] = target[6] = target[12] = 1.0;
    const auto r = multihot_nll_loss(logits, target, layout);
    // four occupancy bits at logit 0 contribute ln 2 each; only slot 0's entity block counts
    CHECK(r.loss == doctest::Approx(4 * std::log(2.0) + std::log(5.0) + std::log(6.0) + std::log(10.0)));
}

TEST_CASE("cross entropy") {
    const std::vector<double> uniform{0.0, 0.0};
    CHECK(softmax_ce_loss(uniform, 0).loss == doctest::Approx(std::log(2.0)));
    const std::vector<double> confident{50.0, 0.0, -3.0};
    const auto r = softmax_ce_loss(confident, 0);
    CHECK(r.loss < 1e-15);
    CHECK(r.grad.norm() < 1e-15);
    CHECK_THROWS_AS(softmax_ce_loss(uniform, 2), UsageError);
    const std::vector<double> huge{1000.0, -1000.0};
    CHECK(std::isfinite(softmax_ce_loss(huge, 1).loss));
}

TEST_CASE("mean squared error") {
    const std::vector<double> a{1.0, 0.0};
    const std::vector<double> b{0.0, 0.0};
    CHECK(mse_loss(a, a).loss == 0.0);
    const auto r = mse_loss(a, b);
    CHECK(r.loss == doctest::Approx(0.5));
    CHECK(r.grad(0) == doctest::Approx(1.0));
    const std::vector<double> c{1.0};
    CHECK_THROWS_AS(mse_loss(a, c), DimensionMismatch);
}

TEST_CASE("softmax sums to one") {
    const std::vector<double> logits{3.0, -1.0, 700.0, 0.5};
    CHECK(softmax(logits).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

namespace {

// Finite-difference oracle on the loss itself, independent of any network.
template <typename F>
double max_loss_grad_error(F loss_of, std::vector<double> x, const Vector& analytic) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + 1e-6;
        const double up = loss_of(x);
        x[i] = keep - 1e-6;
        const double down = loss_of(x);
        x[i] = keep;
        const double numeric = (up - down) / 2e-6;
        const double denom = std::max({std::abs(numeric), std::abs(analytic(static_cast<Eigen::Index>(i))), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic(static_cast<Eigen::Index>(i))) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("loss gradients match finite differences") {
    Rng rng(8);
    const auto layout = multihot_layout(Configuration::Grid2x2);
    std::vector<double> logits(88), target(88, 0.0);
    for (auto& v : logits) v = rng.uniform(-2.0, 2.0);
    for (int s : {0, 2}) {
        target[s * 22] = 1.0;
        target[s * 22 + 1 + rng.uniform_int(0, 4)] = 1.0;
        target[s * 22 + 6 + rng.uniform_int(0, 5)] = 1.0;
        target[s * 22 + 12 + rng.uniform_int(0, 9)] = 1.0;
    }
    auto nll = [&](const std::vector<double>& x) { return multihot_nll_loss(x, target, layout).loss; };
    CHECK(max_loss_grad_error(nll, logits, multihot_nll_loss(logits, target, layout).grad) < 1e-4);

    std::vector<double> ce(5);
    for (auto& v : ce) v = rng.uniform(-3.0, 3.0);
    auto cel = [](const std::vector<double>& x) { return softmax_ce_loss(x, 3).loss; };
    CHECK(max_loss_grad_error(cel, ce, softmax_ce_loss(ce, 3).grad) < 1e-4);

    std::vector<double> a(7), b(7);
    for (auto& v : a) v = rng.uniform(-1.0, 1.0);
    for (auto& v : b) v = rng.uniform(-1.0, 1.0);
    auto msel = [&](const std::vector<double>& x) { return mse_loss(x, b).loss; };
    CHECK(max_loss_grad_error(msel, a, mse_loss(a, b).grad) < 1e-4);
}

TEST_CASE("grad_check passes for each loss") {
    Rng rng(21);
    const std::vector<int> dims{6, 8, 21};
    Mlp net(dims, Activation::Relu, Activation::Identity, rng);
    Matrix x = Matrix::Random(6, 3);
    Matrix t = Matrix::Zero(21, 3);
    for (int j = 0; j < 3; ++j) {
        t(j, j) = 1.0;
        t(5 + j, j) = 1.0;
        t(11 + j, j) = 1.0;
    }
    CHECK(grad_check(net, MultihotNll(multihot_layout(Configuration::Center)), x, t) < 1e-4);

    Matrix labels(1, 3);
    labels << 0, 4, 20;
    CHECK(grad_check(net, CrossEntropy(), x, labels) < 1e-4);
    CHECK(grad_check(net, MeanSquared(), x, Matrix::Random(21, 3)) < 1e-4);
}

namespace {

// Wraps a network and flips the sign of every gradient it reports.
class NegatedGradient final : public Network {
public:
    explicit NegatedGradient(Mlp inner) : inner_(std::move(inner)) {}
    int input_dim() const override { return inner_.input_dim(); }
    int output_dim() const override { return inner_.output_dim(); }
    Matrix forward(const Matrix& b) const override { return inner_.forward(b); }
    Matrix forward_train(const Matrix& b) override { return inner_.forward_train(b); }
    void backward(const Matrix& g) override { inner_.backward(-g); }
    std::vector<ParamView> parameters() override { return inner_.parameters(); }
    std::unique_ptr<Network> clone() const override { return std::make_unique<NegatedGradient>(inner_); }

private:
    Mlp inner_;
};

}  // namespace

TEST_CASE("grad_check detects a sign-flipped gradient") {
    Rng rng(4);
    const std::vector<int> dims{4, 6, 3};
    NegatedGradient net(Mlp(dims, Activation::Relu, Activation::Identity, rng));
    Matrix x = Matrix::Random(4, 2);
    CHECK(grad_check(net, MeanSquared(), x, Matrix::Random(3, 2)) == doctest::Approx(2.0).epsilon(1e-3));
}

namespace {

TrainData separable(int n, std::uint64_t seed) {
    Rng rng(seed);
    TrainData d;
    d.inputs.resize(2, n);
    d.targets.resize(1, n);
    for (int j = 0; j < n; ++j) {
        const double a = rng.uniform(-1.0, 1.0);
        const double b = rng.uniform(-1.0, 1.0);
        d.inputs(0, j) = a;
        d.inputs(1, j) = b;
        d.targets(0, j) = a + b > 0 ? 1.0 : 0.0;
    }
    return d;
}

}  // namespace

TEST_CASE("full-batch training loss does not increase early on") {
    const TrainData d = separable(64, 3);
    Rng rng(2);
    const std::vector<int> dims{2, 8, 2};
    Mlp net(dims, Activation::Relu, Activation::Identity, rng);
    TrainConfig cfg;
    cfg.batch_size = 64;
    cfg.max_epochs = 5;
    cfg.patience = 100;
    const auto history = train(net, d, nullptr, CrossEntropy(), cfg);
    REQUIRE(history.train_loss.size() == 5);
    for (std::size_t e = 1; e < 5; ++e) CHECK(history.train_loss[e] <= history.train_loss[e - 1]);
}

TEST_CASE("training learns a separable problem") {
    const TrainData d = separable(400, 5);
    const TrainData v = separable(200, 6);
    Rng rng(3);
    const std::vector<int> dims{2, 16, 2};
    Mlp net(dims, Activation::Relu, Activation::Identity, rng);
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 32;
    cfg.max_epochs = 60;
    train(net, d, &v, CrossEntropy(), cfg);
    const Matrix out = net.forward(v.inputs);
    int correct = 0;
    for (int j = 0; j < v.size(); ++j) {
        Eigen::Index arg;
        out.col(j).maxCoeff(&arg);
        correct += static_cast<double>(arg) == v.targets(0, j) ? 1 : 0;
    }
    CHECK(correct >= 190);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    const TrainData d = separable(50, 1);
    Rng rng(9);
    const std::vector<int> dims{2, 4, 2};
    Mlp net(dims, Activation::Relu, Activation::Identity, rng);
    const auto before = net.snapshot();
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 3;
    train(net, d, nullptr, CrossEntropy(), cfg);
    CHECK(net.snapshot() == before);
}

TEST_CASE("training is deterministic for a seed") {
    const TrainData d = separable(100, 12);
    auto run = [&] {
        Rng rng(13);
        const std::vector<int> dims{2, 8, 2};
        Mlp net(dims, Activation::Relu, Activation::Identity, rng);
        TrainConfig cfg;
        cfg.max_epochs = 4;
        cfg.seed = 77;
        train(net, d, nullptr, CrossEntropy(), cfg);
        return net.snapshot();
    };
    CHECK(run() == run());
}

TEST_CASE("non-finite loss aborts training") {
    TrainData d = separable(10, 1);
    d.inputs(0, 0) = std::numeric_limits<double>::quiet_NaN();
    Rng rng(1);
    const std::vector<int> dims{2, 4, 2};
    Mlp net(dims, Activation::Relu, Activation::Identity, rng);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    CHECK_THROWS_AS(train(net, d, nullptr, CrossEntropy(), cfg), NonFiniteLoss);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = TrainConfig{};
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("grad_check skips parameters whose probes straddle a ReLU kink") {
    // Second layer pre-activation is exactly 0: every first-layer unit is dead and biases are zero.
    DenseLayer first{Matrix::Constant(2, 2, -1.0), Vector::Zero(2), Activation::Relu, {}, {}};
    DenseLayer second{Matrix::Constant(1, 2, 1.0), Vector::Zero(1), Activation::Relu, {}, {}};
    DenseLayer out{Matrix::Constant(1, 1, 2.0), Vector::Zero(1), Activation::Identity, {}, {}};
    Mlp net({first, second, out});
    Matrix x(2, 1);
    x << 1.0, 1.0;
    const Matrix t = Matrix::Constant(1, 1, 3.0);
    CHECK(net.relu_pattern(x).size() == 3);
    const auto r = grad_check_report(net, MeanSquared(), x, t);
    CHECK(r.skipped == 1);  // the second layer's bias
    CHECK(r.checked == static_cast<long>(net.parameter_count()) - 1);
    CHECK(r.worst < 1e-6);
}
