#include "lrpm/conv.hpp"

#include <cmath>

#include "lrpm/errors.hpp"

namespace lrpm::nn {

namespace {

// Patches of a (channels * side * side) x n tensor batch, one column per output pixel.
Matrix im2col(const Matrix& x, int channels, int side) {
    const Eigen::Index n = x.cols();
    const int area = side * side;
    Matrix cols = Matrix::Zero(channels * 9, area * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double* src = x.col(j).data();
        for (int c = 0; c < channels; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const Eigen::Index row = c * 9 + ky * 3 + kx;
                    for (int y = 0; y < side; ++y) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= side) continue;
                        for (int xx = 0; xx < side; ++xx) {
                            const int sx = xx + kx - 1;
                            if (sx < 0 || sx >= side) continue;
                            cols(row, j * area + y * side + xx) = src[c * area + sy * side + sx];
                        }
                    }
                }
            }
        }
    }
    return cols;
}

Matrix col2im(const Matrix& cols, int channels, int side, Eigen::Index n) {
    const int area = side * side;
    Matrix x = Matrix::Zero(channels * area, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double* dst = x.col(j).data();
        for (int c = 0; c < channels; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const Eigen::Index row = c * 9 + ky * 3 + kx;
                    for (int y = 0; y < side; ++y) {
                        const int sy = y + ky - 1;
                        if (sy < 0 || sy >= side) continue;
                        for (int xx = 0; xx < side; ++xx) {
                            const int sx = xx + kx - 1;
                            if (sx < 0 || sx >= side) continue;
                            dst[c * area + sy * side + sx] += cols(row, j * area + y * side + xx);
                        }
                    }
                }
            }
        }
    }
    return x;
}

// (channels x side*side*n) activations -> (channels * half * half) x n pooled tensor.
Matrix average_pool(const Matrix& a, int channels, int side, Eigen::Index n) {
    const int half = side / 2;
    const int area = side * side;
    Matrix out(channels * half * half, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int c = 0; c < channels; ++c) {
            for (int y = 0; y < half; ++y) {
                for (int x = 0; x < half; ++x) {
                    const Eigen::Index base = j * area + 2 * y * side + 2 * x;
                    out(c * half * half + y * half + x, j) =
                        0.25 * (a(c, base) + a(c, base + 1) + a(c, base + side) + a(c, base + side + 1));
                }
            }
        }
    }
    return out;
}

Matrix average_pool_backward(const Matrix& grad, int channels, int side, Eigen::Index n) {
    const int half = side / 2;
    const int area = side * side;
    Matrix out(channels, area * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (int c = 0; c < channels; ++c) {
            for (int y = 0; y < side; ++y) {
                for (int x = 0; x < side; ++x) {
                    out(c, j * area + y * side + x) = 0.25 * grad(c * half * half + (y / 2) * half + x / 2, j);
                }
            }
        }
    }
    return out;
}

}  // namespace

ConvEncoder::ConvEncoder(int side, std::span<const int> channels, std::span<const int> head_dims, Rng& rng)
    : side_(side) {
    if (channels.empty()) throw UsageError("conv encoder needs at least one stage");
    if (side % (1 << channels.size()) != 0) throw UsageError("raster side must be divisible by 2^stages");
    int in = 1;
    for (int out : channels) {
        ConvStage stage;
        stage.in_channels = in;
        stage.out_channels = out;
        const double limit = std::sqrt(6.0 / static_cast<double>(9 * (in + out)));
        stage.weights.resize(out, in * 9);
        for (Eigen::Index c = 0; c < stage.weights.cols(); ++c) {
            for (Eigen::Index r = 0; r < out; ++r) stage.weights(r, c) = rng.uniform(-limit, limit);
        }
        stage.biases = Vector::Zero(out);
        stage.grad_weights = Matrix::Zero(out, in * 9);
        stage.grad_biases = Vector::Zero(out);
        stages_.push_back(std::move(stage));
        in = out;
    }
    const int reduced = side >> channels.size();
    std::vector<int> dims{in * reduced * reduced};
    dims.insert(dims.end(), head_dims.begin(), head_dims.end());
    head_ = Mlp(dims, Activation::Relu, Activation::Identity, rng);
}

ConvEncoder::ConvEncoder(int side, std::vector<ConvStage> stages, Mlp head)
    : side_(side), stages_(std::move(stages)), head_(std::move(head)) {
    int in = 1;
    for (auto& s : stages_) {
        if (s.in_channels != in || s.weights.rows() != s.out_channels || s.weights.cols() != in * 9 ||
            s.biases.size() != s.out_channels) {
            throw DimensionMismatch("convolution stages do not chain");
        }
        s.grad_weights = Matrix::Zero(s.weights.rows(), s.weights.cols());
        s.grad_biases = Vector::Zero(s.biases.size());
        in = s.out_channels;
    }
    const int reduced = side_ >> stages_.size();
    if (head_.input_dim() != in * reduced * reduced) throw DimensionMismatch("dense head does not match conv output");
}

Matrix ConvEncoder::run(const Matrix& batch, std::vector<StageCache>* cache) const {
    if (batch.rows() != input_dim()) throw DimensionMismatch("conv encoder input dimension mismatch");
    const Eigen::Index n = batch.cols();
    Matrix x = batch;
    int side = side_;
    for (const auto& stage : stages_) {
        Matrix cols = im2col(x, stage.in_channels, side);
        Matrix z = stage.weights * cols;
        z.colwise() += stage.biases;
        z = z.cwiseMax(0.0);
        x = average_pool(z, stage.out_channels, side, n);
        if (cache != nullptr) cache->push_back({std::move(cols), std::move(z)});
        side /= 2;
    }
    return x;
}

Matrix ConvEncoder::forward(const Matrix& batch) const { return head_.forward(run(batch, nullptr)); }

std::vector<bool> ConvEncoder::relu_pattern(const Matrix& batch) const {
    std::vector<StageCache> cache;
    const Matrix features = run(batch, &cache);
    std::vector<bool> pattern;
    for (const auto& stage : cache) {
        for (Eigen::Index k = 0; k < stage.activated.size(); ++k) pattern.push_back(stage.activated.data()[k] > 0.0);
    }
    const auto head = head_.relu_pattern(features);
    pattern.insert(pattern.end(), head.begin(), head.end());
    return pattern;
}

Matrix ConvEncoder::forward_train(const Matrix& batch) {
    cache_.clear();
    return head_.forward_train(run(batch, &cache_));
}

void ConvEncoder::backward(const Matrix& output_grad) {
    if (cache_.size() != stages_.size()) throw UsageError("backward() called without forward_train()");
    head_.backward(output_grad);
    Matrix grad = head_.input_grad();
    const Eigen::Index n = output_grad.cols();
    int side = side_ >> stages_.size();
    for (std::size_t k = stages_.size(); k-- > 0;) {
        side *= 2;
        auto& stage = stages_[k];
        const auto& cache = cache_[k];
        Matrix dz = average_pool_backward(grad, stage.out_channels, side, n);
        dz = dz.cwiseProduct((cache.activated.array() > 0.0).cast<double>().matrix());
        stage.grad_weights.noalias() += dz * cache.columns.transpose();
        stage.grad_biases += dz.rowwise().sum();
        if (k > 0) grad = col2im(stage.weights.transpose() * dz, stage.in_channels, side, n);
    }
}

std::vector<ParamView> ConvEncoder::parameters() {
    std::vector<ParamView> out;
    for (auto& s : stages_) {
        out.push_back({{s.weights.data(), static_cast<std::size_t>(s.weights.size())},
                       {s.grad_weights.data(), static_cast<std::size_t>(s.grad_weights.size())}});
        out.push_back({{s.biases.data(), static_cast<std::size_t>(s.biases.size())},
                       {s.grad_biases.data(), static_cast<std::size_t>(s.grad_biases.size())},
                       false});
    }
    auto head = head_.parameters();
    out.insert(out.end(), head.begin(), head.end());
    return out;
}

std::unique_ptr<Network> ConvEncoder::clone() const {
    return std::make_unique<ConvEncoder>(side_, stages_, Mlp(head_.layers()));
}

}  // namespace lrpm::nn
