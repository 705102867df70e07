#pragma once

#include <vector>

#include "lrpm/nn.hpp"

namespace lrpm::nn {

/// 3x3 convolution (zero padding, stride 1) followed by ReLU and 2x2 average pooling.
struct ConvStage {
    int in_channels = 0;
    int out_channels = 0;
    Matrix weights;  // out x (in * 9), column index = channel * 9 + ky * 3 + kx
    Vector biases;
    Matrix grad_weights;
    Vector grad_biases;
};

/// Small convolutional encoder for square grayscale rasters: convolution
/// stages halving the side each time, then a dense head. Inputs are columns of
/// side * side intensities in row-major order.
class ConvEncoder final : public Network {
public:
    ConvEncoder(int side, std::span<const int> channels, std::span<const int> head_dims, Rng& rng);
    ConvEncoder(int side, std::vector<ConvStage> stages, Mlp head);

    int input_dim() const override { return side_ * side_; }
    int output_dim() const override { return head_.output_dim(); }
    Matrix forward(const Matrix& batch) const override;
    Matrix forward_train(const Matrix& batch) override;
    std::vector<bool> relu_pattern(const Matrix& batch) const override;
    void backward(const Matrix& output_grad) override;
    std::vector<ParamView> parameters() override;
    std::unique_ptr<Network> clone() const override;

    int side() const { return side_; }
    const std::vector<ConvStage>& stages() const { return stages_; }
    const Mlp& head() const { return head_; }

private:
    struct StageCache {
        Matrix columns;
        Matrix activated;
    };

    Matrix run(const Matrix& batch, std::vector<StageCache>* cache) const;

    int side_ = 0;
    std::vector<ConvStage> stages_;
    Mlp head_;
    std::vector<StageCache> cache_;
};

}  // namespace lrpm::nn
