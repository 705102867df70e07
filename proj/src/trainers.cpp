#include "lrpm/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lrpm/conv.hpp"
#include "lrpm/encoding.hpp"
#include "lrpm/errors.hpp"
#include "lrpm/oracle.hpp"

namespace lrpm {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int argmax(const double* values, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

std::uint64_t key_salt(const RuleKey& key) {
    return Rng::mix((static_cast<std::uint64_t>(key.component) << 16) |
                    (static_cast<std::uint64_t>(key.attribute) << 8) | static_cast<std::uint64_t>(key.kind));
}

nn::TrainData classification_data(const RuleDataset& d) {
    nn::TrainData out;
    out.inputs = d.inputs;
    out.targets.resize(1, d.size());
    for (int j = 0; j < d.size(); ++j) out.targets(0, j) = d.labels[static_cast<std::size_t>(j)];
    return out;
}

}  // namespace

int default_latent_dim(Configuration config) {
    switch (config) {
        case Configuration::Center: return 16;
        case Configuration::LeftRight:
        case Configuration::UpDown:
        case Configuration::OutInCenter: return 32;
        case Configuration::Grid2x2:
        case Configuration::OutInGrid: return 64;
        case Configuration::Grid3x3: return 96;
    }
    return 32;
}

Matrix multihot_matrix(std::span<const Panel> panels, Configuration config) {
    Matrix out(multihot_dim(config), static_cast<Eigen::Index>(panels.size()));
    for (std::size_t j = 0; j < panels.size(); ++j) {
        const auto v = encode(panels[j], config);
        out.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return out;
}

SymbolicAutoencoder::SymbolicAutoencoder(Configuration config, int latent_dim, int hidden, Rng& rng)
    : config_(config) {
    if (latent_dim < 1 || hidden < 0) throw UsageError("autoencoder dimensions must be positive");
    const int d = multihot_dim(config);
    std::vector<int> enc{d, latent_dim};
    std::vector<int> dec{latent_dim, d};
    if (hidden > 0) {
        enc.insert(enc.begin() + 1, hidden);
        dec.insert(dec.begin() + 1, hidden);
    }
    encoder_ = nn::Mlp(enc, nn::Activation::Relu, nn::Activation::Identity, rng);
    decoder_ = nn::Mlp(dec, nn::Activation::Relu, nn::Activation::Identity, rng);
}

SymbolicAutoencoder::SymbolicAutoencoder(Configuration config, nn::Mlp encoder, nn::Mlp decoder)
    : config_(config), encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
    if (encoder_.input_dim() != multihot_dim(config) || decoder_.output_dim() != multihot_dim(config) ||
        encoder_.output_dim() != decoder_.input_dim()) {
        throw DimensionMismatch("autoencoder networks do not match the configuration");
    }
}

int SymbolicAutoencoder::hidden() const {
    return encoder_.layers().size() > 1 ? static_cast<int>(encoder_.layers().front().weights.rows()) : 0;
}

Matrix SymbolicAutoencoder::encode_panels(std::span<const Panel> panels) const {
    return nn::forward_chunked(encoder_, multihot_matrix(panels, config_));
}

Vector SymbolicAutoencoder::latent(const Panel& panel) const {
    const auto v = encode(panel, config_);
    return encoder_.forward(std::span<const double>(v));
}

Matrix SymbolicAutoencoder::decode_scores(const Matrix& latents) const {
    Matrix out = nn::forward_chunked(decoder_, latents);
    for (const auto& block : multihot_layout(config_).blocks) {
        if (block.kind != BlockKind::Binary) continue;
        out.row(block.offset) = out.row(block.offset).unaryExpr([](double z) { return sigmoid(z); });
    }
    return out;
}

Panel SymbolicAutoencoder::decode_latent(std::span<const double> latent) const {
    const Matrix z = Eigen::Map<const Matrix>(latent.data(), static_cast<Eigen::Index>(latent.size()), 1);
    const Matrix scores = decode_scores(z);
    return decode(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), config_);
}

Panel SymbolicAutoencoder::reconstruct(const Panel& panel) const {
    const Vector z = latent(panel);
    return decode_latent(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

ReconstructionMetrics reconstruction_accuracy(const SymbolicAutoencoder& ae, std::span<const Panel> panels) {
    ReconstructionMetrics m;
    if (panels.empty()) return m;
    const auto layout = multihot_layout(ae.config());
    const Matrix targets = multihot_matrix(panels, ae.config());
    const Matrix scores = ae.decode_scores(nn::forward_chunked(ae.encoder(), targets));
    long correct_blocks = 0;
    int exact = 0;
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
        const double* t = targets.col(j).data();
        const double* s = scores.col(j).data();
        for (const auto& block : layout.blocks) {
            if (block.mask_index >= 0 && t[block.mask_index] < 0.5) continue;
            ++m.blocks;
            if (block.kind == BlockKind::Binary) {
                correct_blocks += (s[block.offset] > 0.5) == (t[block.offset] > 0.5) ? 1 : 0;
            } else {
                correct_blocks +=
                    argmax(s + block.offset, block.width) == argmax(t + block.offset, block.width) ? 1 : 0;
            }
        }
        const Panel decoded = decode(std::span<const double>(s, static_cast<std::size_t>(scores.rows())), ae.config());
        exact += decoded == panels[static_cast<std::size_t>(j)] ? 1 : 0;
    }
    m.panels = static_cast<int>(panels.size());
    m.block_accuracy = static_cast<double>(correct_blocks) / static_cast<double>(m.blocks);
    m.panel_accuracy = static_cast<double>(exact) / static_cast<double>(m.panels);
    return m;
}

AutoencoderResult train_autoencoder(std::span<const Panel> train, std::span<const Panel> validation,
                                    Configuration config, const AutoencoderOptions& options) {
    if (train.empty()) throw UsageError("autoencoder training needs panels");
    const int latent = options.latent_dim > 0 ? options.latent_dim : default_latent_dim(config);
    Rng rng(Rng::mix(options.train.seed ^ 0xae));
    SymbolicAutoencoder init(config, latent, options.hidden, rng);

    std::vector<nn::DenseLayer> layers = init.encoder().layers();
    for (const auto& l : init.decoder().layers()) layers.push_back(l);
    nn::Mlp joint(std::move(layers));

    nn::TrainData data{multihot_matrix(train, config), {}};
    data.targets = data.inputs;
    nn::TrainData val{multihot_matrix(validation, config), {}};
    val.targets = val.inputs;
    const nn::MultihotNll loss(multihot_layout(config));
    auto history = nn::train(joint, data, validation.empty() ? nullptr : &val, loss, options.train);

    const auto& trained = joint.layers();
    const std::size_t split = init.encoder().layers().size();
    nn::Mlp encoder(std::vector<nn::DenseLayer>(trained.begin(), trained.begin() + static_cast<long>(split)));
    nn::Mlp decoder(std::vector<nn::DenseLayer>(trained.begin() + static_cast<long>(split), trained.end()));
    SymbolicAutoencoder model(config, std::move(encoder), std::move(decoder));
    auto metrics = reconstruction_accuracy(model, validation.empty() ? train : validation);
    return {std::move(model), std::move(history), metrics};
}

std::string describe(const RuleKey& key, Configuration config) {
    return std::string(component_layout(config, key.component).name) + "/" + std::string(to_string(key.attribute)) +
           "/" + std::string(to_string(key.kind));
}

std::vector<RuleKey> applicable_rules(Configuration config) {
    std::vector<RuleKey> out;
    for (int c = 0; c < component_count(config); ++c) {
        for (auto attr : kAllAttributes) {
            for (auto kind : kAllRuleKinds) {
                if (rule_applicability(config, c, attr, kind)) out.push_back({c, attr, kind});
            }
        }
    }
    return out;
}

Matrix RuleNet::probabilities(const Matrix& rows) const {
    Matrix logits = nn::forward_chunked(classifier, rows);
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        const Vector p = nn::softmax(std::span<const double>(logits.col(j).data(), static_cast<std::size_t>(logits.rows())));
        logits.col(j) = p;
    }
    return logits;
}

LatentTable latent_table(std::span<const Problem> problems, const SymbolicAutoencoder& ae) {
    LatentTable table;
    table.latent_dim = ae.latent_dim();
    std::vector<Panel> panels;
    panels.reserve(problems.size() * 16);
    for (const auto& p : problems) {
        if (p.config != ae.config()) throw UsageError("problem configuration does not match the autoencoder");
        panels.insert(panels.end(), p.context.begin(), p.context.end());
        panels.insert(panels.end(), p.options.begin(), p.options.end());
    }
    const Matrix all = ae.encode_panels(panels);
    for (std::size_t i = 0; i < problems.size(); ++i) table.problems.push_back(all.middleCols(static_cast<Eigen::Index>(i * 16), 16));
    return table;
}

Vector row_features(const Matrix& problem_latents, int row, int option) {
    const Eigen::Index l = problem_latents.rows();
    Vector out(3 * l);
    for (int c = 0; c < 3; ++c) {
        const int col = (row == 2 && c == 2) ? kContextPanels + option : row * 3 + c;
        out.segment(c * l, l) = problem_latents.col(col);
    }
    return out;
}

std::vector<int> RuleDataset::class_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(class_count), 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

RuleDataset build_rule_training_set(std::span<const Problem> problems, const LatentTable& latents, const RuleKey& key,
                                    Configuration config, const RuleSetOptions& options) {
    if (!rule_applicability(config, key.component, key.attribute, key.kind)) {
        throw NotApplicable("no " + describe(key, config) + " rule in " + std::string(to_string(config)));
    }
    if (latents.problems.size() != problems.size()) throw DimensionMismatch("latent table does not match the problems");
    RuleDataset out;
    out.class_count = oracle::class_count(key.kind);
    const int per_problem = (options.context_rows ? 2 : 0) + (options.option_rows ? kOptionCount : 0);
    out.inputs.resize(3 * latents.latent_dim, static_cast<Eigen::Index>(problems.size()) * per_problem);
    Eigen::Index col = 0;
    for (std::size_t i = 0; i < problems.size(); ++i) {
        const auto& p = problems[i];
        auto emit = [&](int row, int option) {
            out.inputs.col(col++) = row_features(latents.problems[i], row, option);
            out.labels.push_back(oracle::label_row(problem_row(p, row, option), key.component, key.attribute, key.kind));
        };
        if (options.context_rows) {
            emit(0, -1);
            emit(1, -1);
        }
        if (options.option_rows) {
            for (int k = 0; k < kOptionCount; ++k) emit(2, k);
        }
    }
    return out;
}

RuleDataset build_rule_training_set(std::span<const Problem> problems, const SymbolicAutoencoder& ae,
                                    const RuleKey& key, const RuleSetOptions& options) {
    return build_rule_training_set(problems, latent_table(problems, ae), key, ae.config(), options);
}

void append(RuleDataset& into, const RuleDataset& more) {
    if (more.size() == 0) return;
    if (into.size() == 0) {
        into = more;
        return;
    }
    if (into.inputs.rows() != more.inputs.rows() || into.class_count != more.class_count) {
        throw DimensionMismatch("rule datasets differ in shape");
    }
    Matrix joined(into.inputs.rows(), into.inputs.cols() + more.inputs.cols());
    joined << into.inputs, more.inputs;
    into.inputs = std::move(joined);
    into.labels.insert(into.labels.end(), more.labels.begin(), more.labels.end());
}

void rebalance(RuleDataset& data, double floor, Rng& rng) {
    if (data.size() == 0 || floor <= 0.0) return;
    const auto counts = data.class_counts();
    std::vector<bool> boosted(counts.size(), false);
    long target = 0;
    // Grow the boosted set until it is stable: each boosted class ends at `target`,
    // which is floor * (unboosted total + boosted * target).
    for (bool changed = true; changed;) {
        changed = false;
        long rest = 0;
        int k = 0;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (boosted[c]) {
                ++k;
            } else {
                rest += counts[c];
            }
        }
        const double denom = 1.0 - floor * k;
        if (denom <= 0.0) return;
        target = static_cast<long>(std::ceil(floor * static_cast<double>(rest) / denom));
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (!boosted[c] && counts[c] > 0 && counts[c] < target) {
                boosted[c] = true;
                changed = true;
            }
        }
    }
    std::vector<std::vector<Eigen::Index>> members(counts.size());
    for (int j = 0; j < data.size(); ++j) members[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(j)])].push_back(j);
    std::vector<Eigen::Index> extra;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (!boosted[c]) continue;
        for (long n = counts[c]; n < target; ++n) extra.push_back(members[c][rng.index(members[c].size())]);
    }
    if (extra.empty()) return;
    Matrix grown(data.inputs.rows(), data.inputs.cols() + static_cast<Eigen::Index>(extra.size()));
    grown.leftCols(data.inputs.cols()) = data.inputs;
    for (std::size_t i = 0; i < extra.size(); ++i) {
        grown.col(data.inputs.cols() + static_cast<Eigen::Index>(i)) = data.inputs.col(extra[i]);
        data.labels.push_back(data.labels[static_cast<std::size_t>(extra[i])]);
    }
    data.inputs = std::move(grown);
}

ClassificationReport classification_report(std::span<const int> truth, std::span<const int> predicted,
                                           int class_count) {
    if (truth.size() != predicted.size()) throw DimensionMismatch("truth and predictions differ in length");
    ClassificationReport r;
    r.class_count = class_count;
    r.confusion.assign(static_cast<std::size_t>(class_count), std::vector<long>(static_cast<std::size_t>(class_count), 0));
    long hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= class_count || predicted[i] < 0 || predicted[i] >= class_count) {
            throw UsageError("class label out of range");
        }
        ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
        hits += truth[i] == predicted[i] ? 1 : 0;
    }
    r.support = static_cast<long>(truth.size());
    r.accuracy = r.support > 0 ? static_cast<double>(hits) / static_cast<double>(r.support) : 0.0;
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < class_count; ++c) {
        long tp = r.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        long fp = 0;
        long fn = 0;
        for (int o = 0; o < class_count; ++o) {
            if (o == c) continue;
            fp += r.confusion[static_cast<std::size_t>(o)][static_cast<std::size_t>(c)];
            fn += r.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(o)];
        }
        if (tp + fp + fn == 0) {
            r.per_class_f1.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        r.per_class_f1.push_back(f1);
        sum += f1;
        ++present;
    }
    r.macro_f1 = present > 0 ? sum / present : 0.0;
    return r;
}

std::vector<int> predict_classes(const RuleNet& net, const Matrix& inputs) {
    const Matrix logits = nn::forward_chunked(net.classifier, inputs);
    std::vector<int> out(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out[static_cast<std::size_t>(j)] = argmax(logits.col(j).data(), static_cast<int>(logits.rows()));
    return out;
}

RuleNetResult train_rule_net(const RuleDataset& train, const RuleDataset& validation, const RuleKey& key,
                             const RuleNetOptions& options) {
    if (train.size() == 0) throw UsageError("rule net training data is empty");
    const auto counts = train.class_counts();
    const int present = static_cast<int>(std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }));
    const bool positive = std::any_of(counts.begin() + 1, counts.end(), [](int c) { return c > 0; });
    if (present < 2 || !positive) {
        throw DegenerateLabels("training labels for the rule net cover " + std::to_string(present) +
                               " class(es)" + (positive ? "" : " and no rule-following row"));
    }
    if (options.layers < 0 || options.layers > 2) throw UsageError("rule nets have 1 or 2 hidden layers");
    const nn::TrainData data = classification_data(train);
    const nn::TrainData val = classification_data(validation);
    const RuleDataset& judge = validation.size() > 0 ? validation : train;

    std::optional<RuleNetResult> best;
    for (int layers = 1; layers <= 2; ++layers) {
        if (options.layers != 0 && options.layers != layers) continue;
        Rng rng(Rng::mix(options.train.seed ^ key_salt(key) ^ static_cast<std::uint64_t>(layers)));
        std::vector<int> dims{static_cast<int>(train.inputs.rows())};
        for (int l = 0; l < layers; ++l) dims.push_back(options.hidden);
        dims.push_back(train.class_count);
        RuleNetResult result{RuleNet{key, train.class_count, nn::Mlp(dims, nn::Activation::Relu, nn::Activation::Identity, rng)},
                             {}, {}, layers};
        nn::TrainConfig tcfg = options.train;
        tcfg.seed = Rng::mix(options.train.seed ^ key_salt(key));
        result.history = nn::train(result.net.classifier, data, validation.size() > 0 ? &val : nullptr,
                                   nn::CrossEntropy(), tcfg);
        const auto predicted = predict_classes(result.net, judge.inputs);
        result.validation = classification_report(judge.labels, predicted, train.class_count);
        if (!best || result.validation.macro_f1 > best->validation.macro_f1) best = std::move(result);
    }
    return std::move(*best);
}

std::string_view to_string(ImageArch arch) { return arch == ImageArch::ConvLite ? "conv-lite" : "flattened-mlp"; }

std::optional<ImageArch> parse_image_arch(std::string_view text) {
    if (text == "conv-lite") return ImageArch::ConvLite;
    if (text == "flattened-mlp") return ImageArch::FlattenedMlp;
    return std::nullopt;
}

Matrix ImageEncoder::encode(const Matrix& pixels) const { return nn::forward_chunked(*net, pixels, 256); }

Matrix ImageEncoder::encode_panels(std::span<const Panel> panels, Configuration config) const {
    // Render in chunks so the pixel matrix stays small.
    Matrix out(latent_dim(), static_cast<Eigen::Index>(panels.size()));
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < panels.size(); start += kChunk) {
        const std::size_t len = std::min(kChunk, panels.size() - start);
        out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) =
            encode(render_matrix(panels.subspan(start, len), config, raster_size));
    }
    return out;
}

Matrix raster_matrix(std::span<const Raster> rasters) {
    if (rasters.empty()) return {};
    const Eigen::Index n = static_cast<Eigen::Index>(rasters.front().pixels.size());
    Matrix out(n, static_cast<Eigen::Index>(rasters.size()));
    for (std::size_t j = 0; j < rasters.size(); ++j) {
        if (static_cast<Eigen::Index>(rasters[j].pixels.size()) != n) throw DimensionMismatch("rasters differ in size");
        for (Eigen::Index i = 0; i < n; ++i) {
            out(i, static_cast<Eigen::Index>(j)) = (255.0 - rasters[j].pixels[static_cast<std::size_t>(i)]) / 255.0;
        }
    }
    return out;
}

Matrix render_matrix(std::span<const Panel> panels, Configuration config, int raster_size) {
    std::vector<Raster> rasters;
    rasters.reserve(panels.size());
    for (const auto& p : panels) rasters.push_back(render_panel(p, config, raster_size));
    return raster_matrix(rasters);
}

std::unique_ptr<nn::Network> make_image_network(ImageArch arch, int raster_size, int latent_dim, Rng& rng) {
    if (arch == ImageArch::ConvLite) {
        const std::vector<int> channels{8, 16};
        const std::vector<int> head{128, latent_dim};
        return std::make_unique<nn::ConvEncoder>(raster_size, channels, head, rng);
    }
    const std::vector<int> dims{raster_size * raster_size, 256, latent_dim};
    return std::make_unique<nn::Mlp>(dims, nn::Activation::Relu, nn::Activation::Identity, rng);
}

AlignmentMetrics alignment_metrics(const ImageEncoder& encoder, const SymbolicAutoencoder& ae,
                                   std::span<const Panel> panels, int probe_size) {
    AlignmentMetrics m;
    if (panels.empty()) return m;
    const Matrix target = ae.encode_panels(panels);
    const Matrix predicted = encoder.encode_panels(panels, ae.config());
    const double dims = static_cast<double>(target.rows());
    m.mse = (predicted - target).squaredNorm() / (dims * static_cast<double>(target.cols()));

    // Probe on distinct panels only.
    std::vector<Eigen::Index> probe;
    std::set<std::vector<double>> seen;
    for (std::size_t j = 0; j < panels.size() && static_cast<int>(probe.size()) < probe_size; ++j) {
        if (seen.insert(encode(panels[j], ae.config())).second) probe.push_back(static_cast<Eigen::Index>(j));
    }
    m.probe_size = static_cast<int>(probe.size());
    double pair_sum = 0.0;
    long pairs = 0;
    int hits = 0;
    for (std::size_t a = 0; a < probe.size(); ++a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_index = 0;
        for (std::size_t b = 0; b < probe.size(); ++b) {
            const double d = (predicted.col(probe[a]) - target.col(probe[b])).squaredNorm();
            if (d < best) {
                best = d;
                best_index = b;
            }
            if (b > a) {
                pair_sum += (target.col(probe[a]) - target.col(probe[b])).squaredNorm() / dims;
                ++pairs;
            }
        }
        hits += best_index == a ? 1 : 0;
    }
    m.mean_pairwise_sq = pairs > 0 ? pair_sum / static_cast<double>(pairs) : 0.0;
    m.ratio = m.mean_pairwise_sq > 0.0 ? m.mse / m.mean_pairwise_sq : std::numeric_limits<double>::infinity();
    m.nearest_hit_rate = m.probe_size > 0 ? static_cast<double>(hits) / m.probe_size : 0.0;
    return m;
}

ImageEncoderResult train_image_encoder(std::span<const Panel> train, std::span<const Panel> validation,
                                       const SymbolicAutoencoder& ae, const ImageEncoderOptions& options) {
    if (train.empty()) throw UsageError("image encoder training needs panels");
    Rng rng(Rng::mix(options.train.seed ^ 0x1e));
    ImageEncoder encoder{options.arch, options.raster_size,
                         make_image_network(options.arch, options.raster_size, ae.latent_dim(), rng)};
    nn::TrainData data{render_matrix(train, ae.config(), options.raster_size), ae.encode_panels(train)};
    nn::TrainData val;
    if (!validation.empty()) {
        val.inputs = render_matrix(validation, ae.config(), options.raster_size);
        val.targets = ae.encode_panels(validation);
    }
    auto history = nn::train(*encoder.net, data, validation.empty() ? nullptr : &val, nn::MeanSquared(), options.train);
    auto metrics = alignment_metrics(encoder, ae, validation.empty() ? train : validation);
    return {std::move(encoder), std::move(history), metrics};
}

std::vector<Panel> collect_panels(std::span<const Problem> problems, std::size_t limit) {
    std::vector<Panel> out;
    for (const auto& p : problems) {
        for (const auto* group : {&p.context, &p.options}) {
            for (const auto& panel : *group) {
                if (limit != 0 && out.size() >= limit) return out;
                out.push_back(panel);
            }
        }
    }
    return out;
}

std::vector<Panel> distinct_panels(std::span<const Problem> problems, std::size_t limit) {
    std::vector<Panel> out;
    std::set<std::vector<double>> seen;
    for (const auto& p : problems) {
        for (const auto* group : {&p.context, &p.options}) {
            for (const auto& panel : *group) {
                if (limit != 0 && out.size() >= limit) return out;
                if (seen.insert(encode(panel, p.config)).second) out.push_back(panel);
            }
        }
    }
    return out;
}

}  // namespace lrpm
