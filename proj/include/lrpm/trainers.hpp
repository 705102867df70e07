#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrpm/core.hpp"
#include "lrpm/nn.hpp"
#include "lrpm/renderer.hpp"

namespace lrpm {

using nn::Matrix;
using nn::Vector;

int default_latent_dim(Configuration config);

/// Multihots of `panels` as columns.
Matrix multihot_matrix(std::span<const Panel> panels, Configuration config);

/// Symbolic encoder E_S (multihot -> latent) and decoder D_S (latent -> multihot logits).
/// `hidden` = 0 makes both maps a single affine layer.
class SymbolicAutoencoder {
public:
    SymbolicAutoencoder(Configuration config, int latent_dim, int hidden, Rng& rng);
    SymbolicAutoencoder(Configuration config, nn::Mlp encoder, nn::Mlp decoder);

    Configuration config() const { return config_; }
    int latent_dim() const { return encoder_.output_dim(); }
    int hidden() const;  // 0 for affine maps
    const nn::Mlp& encoder() const { return encoder_; }
    const nn::Mlp& decoder() const { return decoder_; }
    nn::Mlp& encoder() { return encoder_; }
    nn::Mlp& decoder() { return decoder_; }

    Matrix encode_panels(std::span<const Panel> panels) const;
    Vector latent(const Panel& panel) const;
    /// Decoder outputs with occupancy logits squashed to probabilities.
    Matrix decode_scores(const Matrix& latents) const;
    Panel decode_latent(std::span<const double> latent) const;
    Panel reconstruct(const Panel& panel) const;

private:
    Configuration config_;
    nn::Mlp encoder_;
    nn::Mlp decoder_;
};

struct ReconstructionMetrics {
    double block_accuracy = 0.0;  // fraction of active one-hot / occupancy blocks reproduced
    double panel_accuracy = 0.0;  // fraction of panels decoded exactly
    long blocks = 0;
    int panels = 0;
};

ReconstructionMetrics reconstruction_accuracy(const SymbolicAutoencoder& ae, std::span<const Panel> panels);

struct AutoencoderOptions {
    int latent_dim = 0;  // 0: default_latent_dim
    int hidden = 0;      // 0: affine encoder and decoder
    nn::TrainConfig train;
};

struct AutoencoderResult {
    SymbolicAutoencoder model;
    nn::TrainHistory history;
    ReconstructionMetrics validation;
};

/// Minimizes the summed per-block negative log-likelihood of the reconstruction.
AutoencoderResult train_autoencoder(std::span<const Panel> train, std::span<const Panel> validation,
                                    Configuration config, const AutoencoderOptions& options);

/// Identifies one rule net: a (component, attribute, rule kind) cell of the applicability table.
struct RuleKey {
    int component = 0;
    Attribute attribute = Attribute::Type;
    RuleKind kind = RuleKind::Constant;

    auto operator<=>(const RuleKey&) const = default;
};

std::string describe(const RuleKey& key, Configuration config);
std::vector<RuleKey> applicable_rules(Configuration config);

/// Classifier over three concatenated panel latents.
struct RuleNet {
    RuleKey key;
    int class_count = 2;
    nn::Mlp classifier;

    /// Softmax probabilities for each column of 3 * latentDim row features.
    Matrix probabilities(const Matrix& rows) const;
};

/// Latents of the 16 panels of each problem: columns 0-7 context, 8-15 options.
struct LatentTable {
    int latent_dim = 0;
    std::vector<Matrix> problems;
};

LatentTable latent_table(std::span<const Problem> problems, const SymbolicAutoencoder& ae);

/// Concatenated latents of row `row`, completed by `option` when row == 2.
Vector row_features(const Matrix& problem_latents, int row, int option);

struct RuleDataset {
    Matrix inputs;            // 3 * latentDim x n
    std::vector<int> labels;  // class per column
    int class_count = 2;

    int size() const { return static_cast<int>(labels.size()); }
    std::vector<int> class_counts() const;
};

struct RuleSetOptions {
    bool context_rows = true;  // rows 1 and 2
    /// Row 3 completed by each of the 8 options, labelled by the oracle.
    bool option_rows = false;
};

/// Rows of each problem as selected by `options`, labelled with oracle::label_row.
RuleDataset build_rule_training_set(std::span<const Problem> problems, const LatentTable& latents, const RuleKey& key,
                                    Configuration config, const RuleSetOptions& options = {});
RuleDataset build_rule_training_set(std::span<const Problem> problems, const SymbolicAutoencoder& ae,
                                    const RuleKey& key, const RuleSetOptions& options = {});

/// Duplicates random samples of every present class below `floor` of the total
/// until each reaches the floor.
void rebalance(RuleDataset& data, double floor, Rng& rng);
void append(RuleDataset& into, const RuleDataset& more);

struct ClassificationReport {
    int class_count = 0;
    std::vector<std::vector<long>> confusion;  // [truth][prediction]
    std::vector<double> per_class_f1;          // NaN for classes absent from truth and predictions
    double macro_f1 = 0.0;                     // mean over classes present in truth or predictions
    double accuracy = 0.0;
    long support = 0;
};

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                           int class_count);
std::vector<int> predict_classes(const RuleNet& net, const Matrix& inputs);

struct RuleNetOptions {
    int hidden = 64;
    int layers = 0;  // 1 or 2 hidden layers; 0 trains both and keeps the better validation F1
    nn::TrainConfig train;
};

struct RuleNetResult {
    RuleNet net;
    nn::TrainHistory history;
    ClassificationReport validation;
    int hidden_layers = 1;
};

/// Cross-entropy training. Throws DegenerateLabels when the training labels hold
/// fewer than two classes or no rule-following class.
RuleNetResult train_rule_net(const RuleDataset& train, const RuleDataset& validation, const RuleKey& key,
                             const RuleNetOptions& options);

enum class ImageArch { ConvLite, FlattenedMlp };

std::string_view to_string(ImageArch arch);
std::optional<ImageArch> parse_image_arch(std::string_view text);

/// Image encoder E_X mapping rasters to the symbolic latent space.
struct ImageEncoder {
    ImageArch arch = ImageArch::ConvLite;
    int raster_size = kDefaultRasterSize;
    std::shared_ptr<nn::Network> net;

    int latent_dim() const { return net->output_dim(); }
    Matrix encode(const Matrix& pixels) const;
    Matrix encode_panels(std::span<const Panel> panels, Configuration config) const;
};

/// Rasters as columns of (255 - p) / 255 intensities.
Matrix raster_matrix(std::span<const Raster> rasters);
Matrix render_matrix(std::span<const Panel> panels, Configuration config, int raster_size);

std::unique_ptr<nn::Network> make_image_network(ImageArch arch, int raster_size, int latent_dim, Rng& rng);

struct AlignmentMetrics {
    double mse = 0.0;                  // mean squared latent error per dimension
    double mean_pairwise_sq = 0.0;     // mean squared distance per dimension between distinct panels' latents
    double ratio = 0.0;                // mse / mean_pairwise_sq
    double nearest_hit_rate = 0.0;     // probe panels whose E_X latent is nearest their own E_S latent
    int probe_size = 0;
};

AlignmentMetrics alignment_metrics(const ImageEncoder& encoder, const SymbolicAutoencoder& ae,
                                   std::span<const Panel> panels, int probe_size = 100);

struct ImageEncoderOptions {
    ImageArch arch = ImageArch::ConvLite;
    int raster_size = kDefaultRasterSize;
    nn::TrainConfig train;
};

struct ImageEncoderResult {
    ImageEncoder encoder;
    nn::TrainHistory history;
    AlignmentMetrics validation;
};

/// Regresses E_S latents of the paired panels from their renderings; `ae` is only read.
ImageEncoderResult train_image_encoder(std::span<const Panel> train, std::span<const Panel> validation,
                                       const SymbolicAutoencoder& ae, const ImageEncoderOptions& options);

/// The 16 panels of each problem in order (context, then options), at most `limit` (0: all).
std::vector<Panel> collect_panels(std::span<const Problem> problems, std::size_t limit = 0);
/// Distinct panels in first-seen order, at most `limit` (0: all).
std::vector<Panel> distinct_panels(std::span<const Problem> problems, std::size_t limit = 0);

}  // namespace lrpm
