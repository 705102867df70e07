#include "lrpm/pipeline.hpp"

#include <cmath>
#include <sstream>

#include "lrpm/errors.hpp"
#include "lrpm/generator.hpp"

namespace lrpm {

namespace {

constexpr double kMinorityFloor = 0.05;

nn::TrainConfig train_config(const RunConfig& cfg, const std::string& prefix, std::uint64_t seed) {
    nn::TrainConfig t;
    t.max_epochs = cfg.get_int(prefix + "_epochs");
    t.batch_size = cfg.get_int(prefix + "_batch");
    t.learning_rate = cfg.get_double(prefix + "_lr");
    t.patience = cfg.get_int(prefix + "_patience");
    if (cfg.has(prefix + "_decay")) t.weight_decay = cfg.get_double(prefix + "_decay");
    t.seed = seed;
    return t;
}

void say(const Progress& progress, const std::string& text) {
    if (progress) progress(text);
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

void check_split(std::span<const Problem> problems, Configuration config, const char* what) {
    for (const auto& p : problems) {
        if (p.config != config) throw UsageError(std::string(what) + " problems mix configurations");
    }
}

}  // namespace

Dataset generate_split(Configuration config, std::uint64_t seed, const std::string& split, std::uint64_t first_index,
                       int count) {
    if (count < 0) throw UsageError("problem count must be non-negative");
    GeneratorConfig g;
    g.config = config;
    g.seed = seed;
    Dataset d;
    d.header.config = config;
    d.header.seed = seed;
    d.header.first_index = first_index;
    d.header.count = count;
    d.header.split = split;
    d.problems.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) d.problems.push_back(generate_indexed(g, first_index + static_cast<std::uint64_t>(i)));
    return d;
}

nlohmann::json to_json(const ReconstructionMetrics& m) {
    return {{"blockAccuracy", m.block_accuracy}, {"panelAccuracy", m.panel_accuracy}, {"blocks", m.blocks},
            {"panels", m.panels}};
}

nlohmann::json to_json(const ClassificationReport& r) {
    nlohmann::json per_class = nlohmann::json::array();
    for (double f : r.per_class_f1) per_class.push_back(finite_or_null(f));
    return {{"macroF1", r.macro_f1}, {"accuracy", r.accuracy}, {"support", r.support}, {"perClassF1", per_class}};
}

nlohmann::json to_json(const AlignmentMetrics& m) {
    return {{"mse", m.mse},
            {"meanPairwiseSq", m.mean_pairwise_sq},
            {"ratio", finite_or_null(m.ratio)},
            {"nearestHitRate", m.nearest_hit_rate},
            {"probeSize", m.probe_size}};
}

void train_autoencoder_stage(ModelBundle& bundle, std::span<const Problem> train, std::span<const Problem> validation,
                             const RunConfig& cfg, const Progress& progress) {
    if (train.empty()) throw UsageError("autoencoder training needs a non-empty train split");
    const Configuration config = train.front().config;
    check_split(train, config, "train");
    check_split(validation, config, "validation");
    const auto seed = cfg.get_u64("seed");
    const auto panels = collect_panels(train, static_cast<std::size_t>(cfg.get_int("ae_panels")));
    const auto held_out = collect_panels(validation, 2000);

    AutoencoderOptions o;
    o.latent_dim = cfg.get_int("latent_dim");
    o.hidden = cfg.get_int("ae_hidden");
    o.train = train_config(cfg, "ae", Rng::mix(seed ^ 0xa1));
    say(progress, "autoencoder: " + std::to_string(panels.size()) + " panels, " + std::string(to_string(config)));
    auto r = train_autoencoder(panels, held_out, config, o);

    bundle = ModelBundle{};
    bundle.config = config;
    bundle.seed = seed;
    bundle.latent_dim = r.model.latent_dim();
    bundle.autoencoder_metrics = to_json(r.validation);
    bundle.autoencoder_metrics["trainPanels"] = panels.size();
    bundle.autoencoder_metrics["epochs"] = r.history.train_loss.size();
    bundle.autoencoder.emplace(std::move(r.model));
    say(progress, "autoencoder: held-out block accuracy " + fixed(100.0 * r.validation.block_accuracy, 2) +
                      "%, panel accuracy " + fixed(100.0 * r.validation.panel_accuracy, 2) + "%");
}

void train_rule_stage(ModelBundle& bundle, std::span<const Problem> train, std::span<const Problem> validation,
                      const RunConfig& cfg, const Progress& progress) {
    if (!bundle.autoencoder) throw MissingPrerequisite("rule nets need a trained autoencoder (run `train ae` first)");
    if (train.empty()) throw UsageError("rule training needs a non-empty train split");
    const Configuration config = bundle.config;
    check_split(train, config, "train");
    check_split(validation, config, "validation");
    const auto& ae = *bundle.autoencoder;
    const auto seed = cfg.get_u64("seed");
    const int forced = cfg.get_int("rule_forced");
    const auto option_problems =
        std::min(train.size(), static_cast<std::size_t>(cfg.get_int("rule_option_problems")));
    RuleSetOptions option_rows;
    option_rows.context_rows = false;
    option_rows.option_rows = true;

    const auto train_latents = latent_table(train, ae);
    LatentTable option_latents{train_latents.latent_dim,
                               {train_latents.problems.begin(),
                                train_latents.problems.begin() + static_cast<long>(option_problems)}};
    const auto val_latents = latent_table(validation, ae);
    GeneratorConfig forced_gen;
    forced_gen.config = config;
    forced_gen.seed = Rng::mix(seed ^ 0xf0);

    bundle.rule_nets.clear();
    bundle.rule_metrics.clear();
    const auto keys = applicable_rules(config);
    std::uint64_t key_index = 0;
    for (const auto& key : keys) {
        auto data = build_rule_training_set(train, train_latents, key, config);
        if (option_problems > 0) {
            append(data, build_rule_training_set(train.first(option_problems), option_latents, key, config, option_rows));
        }
        if (forced > 0) {
            std::vector<Problem> extra;
            extra.reserve(static_cast<std::size_t>(forced));
            for (int i = 0; i < forced; ++i) {
                extra.push_back(generate_indexed(forced_gen, key_index * 1000000 + static_cast<std::uint64_t>(i),
                                                 ForcedRule{key.component, key.attribute, key.kind}));
            }
            append(data, build_rule_training_set(extra, ae, key));
        }
        Rng balance(Rng::mix(seed ^ 0xba ^ key_index));
        rebalance(data, kMinorityFloor, balance);
        const auto held_out = build_rule_training_set(validation, val_latents, key, config);

        RuleNetOptions o;
        o.hidden = cfg.get_int("rule_hidden");
        o.layers = cfg.get_int("rule_layers");
        o.train = train_config(cfg, "rule", Rng::mix(seed ^ 0xb2));
        RuleNetResult r = [&] {
            try {
                return train_rule_net(data, held_out, key, o);
            } catch (const Error& e) {
                throw std::decay_t<decltype(e)>(describe(key, config) + ": " + e.what());
            }
        }();
        nlohmann::json metrics = to_json(r.validation);
        metrics["hiddenLayers"] = r.hidden_layers;
        metrics["trainRows"] = data.size();
        metrics["classCounts"] = data.class_counts();
        metrics["epochs"] = r.history.train_loss.size();
        bundle.rule_metrics[key] = metrics;
        bundle.rule_nets.emplace(key, std::move(r.net));
        say(progress, "rule net " + describe(key, config) + ": F1 " + fixed(r.validation.macro_f1, 3) + " (" +
                          std::to_string(r.hidden_layers) + " hidden layer" + (r.hidden_layers > 1 ? "s" : "") + ")");
        ++key_index;
    }
}

// img_epochs = 0 trains for about this many panel presentations.
constexpr int kImagePresentations = 120000;

void train_image_stage(ModelBundle& bundle, std::span<const Problem> train, std::span<const Problem> validation,
                       const RunConfig& cfg, const Progress& progress) {
    if (!bundle.autoencoder) throw MissingPrerequisite("the image encoder needs a trained autoencoder (run `train ae` first)");
    if (train.empty()) throw UsageError("image training needs a non-empty train split");
    check_split(train, bundle.config, "train");
    check_split(validation, bundle.config, "validation");
    const auto arch = parse_image_arch(cfg.get("img_arch"));
    if (!arch) throw UsageError("unknown img_arch '" + cfg.get("img_arch") + "'");
    const auto panels = distinct_panels(train, static_cast<std::size_t>(cfg.get_int("img_panels")));
    const auto held_out = distinct_panels(validation, 500);

    ImageEncoderOptions o;
    o.arch = *arch;
    o.raster_size = cfg.get_int("raster_size");
    o.train = train_config(cfg, "img", Rng::mix(cfg.get_u64("seed") ^ 0xc3));
    if (cfg.get_int("img_epochs") == 0) {
        o.train.max_epochs = std::max(20, kImagePresentations / static_cast<int>(panels.size()));
    }
    say(progress, "image encoder: " + std::to_string(panels.size()) + " distinct panels, " +
                      std::string(to_string(*arch)) + ", " + std::to_string(o.raster_size) + "px, up to " +
                      std::to_string(o.train.max_epochs) + " epochs");
    auto r = train_image_encoder(panels, held_out, *bundle.autoencoder, o);
    bundle.image_metrics = to_json(r.validation);
    bundle.image_metrics["trainPanels"] = panels.size();
    bundle.image_metrics["epochs"] = r.history.train_loss.size();
    bundle.image_encoder = std::move(r.encoder);
    say(progress, "image encoder: alignment MSE " + fixed(r.validation.mse, 5) + " (" +
                      fixed(100.0 * r.validation.ratio, 2) + "% of mean pairwise distance), nearest-latent hits " +
                      fixed(100.0 * r.validation.nearest_hit_rate, 1) + "%");
}

}  // namespace lrpm
