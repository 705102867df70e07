#include <cmath>

#include "doctest.h"
#include "lrpm/encoding.hpp"
#include "lrpm/errors.hpp"
#include "lrpm/generator.hpp"
#include "lrpm/trainers.hpp"
#include "lrpm/weights.hpp"

using namespace lrpm;

namespace {

std::vector<Problem> problems(Configuration config, int count, std::uint64_t seed) {
    GeneratorConfig g;
    g.config = config;
    g.seed = seed;
    return generate_dataset(g, count);
}

SymbolicAutoencoder small_autoencoder(Configuration config, int latent) {
    Rng rng(3);
    return SymbolicAutoencoder(config, latent, 0, rng);
}

}  // namespace

TEST_CASE("latent widths per configuration") {
    CHECK(default_latent_dim(Configuration::Center) == 16);
    CHECK(default_latent_dim(Configuration::OutInCenter) == 32);
    CHECK(default_latent_dim(Configuration::Grid2x2) == 64);
    CHECK(default_latent_dim(Configuration::Grid3x3) == 96);
}

TEST_CASE("autoencoder shapes and all-zero decode") {
    Rng rng(1);
    SymbolicAutoencoder ae(Configuration::Grid2x2, 12, 20, rng);
    CHECK(ae.latent_dim() == 12);
    CHECK(ae.hidden() == 20);
    CHECK(ae.encoder().input_dim() == 88);
    CHECK(ae.decoder().output_dim() == 88);
    CHECK(small_autoencoder(Configuration::Center, 8).hidden() == 0);

    const std::vector<double> zero(88, 0.0);
    const Vector z = ae.encoder().forward(std::span<const double>(zero));
    const Panel p = ae.decode_latent(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    CHECK(validate_panel(p, Configuration::Grid2x2).empty());

    CHECK_THROWS_AS(SymbolicAutoencoder(Configuration::Center, ae.encoder(), ae.decoder()), DimensionMismatch);
}

TEST_CASE("occupancy scores are probabilities") {
    const auto ae = small_autoencoder(Configuration::Grid2x2, 6);
    const Matrix z = Matrix::Random(6, 5) * 10.0;
    const Matrix s = ae.decode_scores(z);
    for (const auto& block : multihot_layout(Configuration::Grid2x2).blocks) {
        if (block.kind != BlockKind::Binary) continue;
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            CHECK(s(block.offset, j) > 0.0);
            CHECK(s(block.offset, j) < 1.0);
        }
    }
}

TEST_CASE("full-width autoencoder drives the loss near zero") {
    const auto train = collect_panels(problems(Configuration::Center, 60, 4));
    AutoencoderOptions o;
    o.latent_dim = multihot_dim(Configuration::Center);
    o.train.max_epochs = 200;
    o.train.learning_rate = 0.01;
    o.train.patience = 200;
    const auto r = train_autoencoder(train, {}, Configuration::Center, o);
    CHECK(r.history.train_loss.back() < 0.01);
    CHECK(r.validation.block_accuracy == 1.0);
    CHECK(r.validation.panel_accuracy == 1.0);
    CHECK(r.validation.panels == static_cast<int>(train.size()));
}

TEST_CASE("reconstruction accuracy counts active blocks only") {
    // An untrained net still gets one count per occupancy bit plus one per occupied slot's three blocks.
    const auto ps = problems(Configuration::Grid2x2, 3, 5);
    const auto panels = collect_panels(ps);
    const auto ae = small_autoencoder(Configuration::Grid2x2, 8);
    const auto m = reconstruction_accuracy(ae, panels);
    long expected = 0;
    for (const auto& p : panels) expected += 4 + 3 * static_cast<long>(p.components[0].occupancy.size());
    CHECK(m.blocks == expected);
    CHECK(m.panels == 48);
}

TEST_CASE("applicable rule nets per configuration") {
    CHECK(applicable_rules(Configuration::Center).size() == 11);
    CHECK(applicable_rules(Configuration::LeftRight).size() == 22);
    CHECK(applicable_rules(Configuration::UpDown).size() == 22);
    CHECK(applicable_rules(Configuration::OutInCenter).size() == 17);
    CHECK(applicable_rules(Configuration::Grid2x2).size() == 19);
    CHECK(applicable_rules(Configuration::Grid3x3).size() == 19);
    CHECK(applicable_rules(Configuration::OutInGrid).size() == 25);
    CHECK(describe(RuleKey{1, Attribute::Size, RuleKind::Progression}, Configuration::LeftRight) ==
          "right/size/progression");
}

TEST_CASE("row features pick the option for the third row") {
    Matrix lat(2, 16);
    for (int c = 0; c < 16; ++c) lat.col(c).setConstant(c);
    const Vector r0 = row_features(lat, 0, -1);
    CHECK(r0.size() == 6);
    CHECK(r0(0) == 0.0);
    CHECK(r0(2) == 1.0);
    CHECK(r0(4) == 2.0);
    const Vector r2 = row_features(lat, 2, 5);
    CHECK(r2(0) == 6.0);
    CHECK(r2(2) == 7.0);
    CHECK(r2(4) == 13.0);
}

TEST_CASE("rule training set rows and labels") {
    GeneratorConfig g;
    g.seed = 8;
    const ForcedRule forced{0, Attribute::Type, RuleKind::Constant};
    const std::vector<Problem> ps{generate_indexed(g, 0, forced), generate_indexed(g, 1, forced)};
    const auto ae = small_autoencoder(Configuration::Center, 16);
    const RuleKey key{0, Attribute::Type, RuleKind::Constant};
    const auto d = build_rule_training_set(ps, ae, key);
    CHECK(d.size() == 4);
    CHECK(d.inputs.rows() == 48);
    CHECK(d.class_count == 2);
    for (int y : d.labels) CHECK(y == 1);

    RuleSetOptions with_options;
    with_options.option_rows = true;
    const auto e = build_rule_training_set(ps, ae, key, with_options);
    CHECK(e.size() == 20);
    with_options.context_rows = false;
    CHECK(build_rule_training_set(ps, ae, key, with_options).size() == 16);

    const auto p5 = build_rule_training_set(ps, ae, RuleKey{0, Attribute::Size, RuleKind::Progression});
    CHECK(p5.class_count == 5);
    CHECK_THROWS_AS(build_rule_training_set(ps, ae, RuleKey{0, Attribute::Number, RuleKind::Constant}),
                    NotApplicable);
}

TEST_CASE("rebalance lifts minority classes to the floor") {
    RuleDataset d;
    d.class_count = 3;
    d.inputs = Matrix::Zero(1, 100);
    for (int i = 0; i < 100; ++i) {
        d.inputs(0, i) = i;
        d.labels.push_back(i < 98 ? 0 : 1);
    }
    Rng rng(2);
    rebalance(d, 0.05, rng);
    const auto counts = d.class_counts();
    CHECK(counts[0] == 98);
    CHECK(counts[2] == 0);
    CHECK(static_cast<double>(counts[1]) / d.size() >= 0.05);
    CHECK(counts[1] <= 6);
    for (int j = 100; j < d.size(); ++j) {
        CHECK(d.labels[static_cast<std::size_t>(j)] == 1);
        CHECK(d.inputs(0, j) >= 98.0);
    }

    const auto before = d.size();
    rebalance(d, 0.05, rng);
    CHECK(d.size() == before);
}

TEST_CASE("classification report by hand") {
    const std::vector<int> truth{0, 0, 1, 1, 2};
    const std::vector<int> pred{0, 1, 1, 1, 0};
    const auto r = classification_report(truth, pred, 4);
    CHECK(r.confusion[0][1] == 1);
    CHECK(r.per_class_f1[0] == doctest::Approx(0.5));
    CHECK(r.per_class_f1[1] == doctest::Approx(0.8));
    CHECK(r.per_class_f1[2] == doctest::Approx(0.0));
    CHECK(std::isnan(r.per_class_f1[3]));
    CHECK(r.macro_f1 == doctest::Approx(1.3 / 3.0));
    CHECK(r.accuracy == doctest::Approx(0.6));
    CHECK(r.support == 5);
    CHECK_THROWS_AS(classification_report(truth, std::vector<int>{0}, 4), DimensionMismatch);
}

TEST_CASE("rule net training rejects degenerate labels") {
    RuleDataset d;
    d.class_count = 2;
    d.inputs = Matrix::Random(6, 10);
    d.labels.assign(10, 0);
    RuleNetOptions o;
    o.train.max_epochs = 1;
    CHECK_THROWS_AS(train_rule_net(d, {}, RuleKey{}, o), DegenerateLabels);
    d.labels.assign(10, 1);
    CHECK_THROWS_AS(train_rule_net(d, {}, RuleKey{}, o), DegenerateLabels);
}

TEST_CASE("rule net learns a separable rule") {
    RuleDataset d;
    d.class_count = 2;
    Rng rng(6);
    d.inputs.resize(6, 400);
    for (int j = 0; j < 400; ++j) {
        for (int i = 0; i < 6; ++i) d.inputs(i, j) = rng.uniform(-1.0, 1.0);
        d.labels.push_back(d.inputs(0, j) + d.inputs(3, j) > 0.0 ? 1 : 0);
    }
    RuleNetOptions o;
    o.hidden = 16;
    o.train.max_epochs = 60;
    o.train.learning_rate = 0.01;
    const auto r = train_rule_net(d, d, RuleKey{}, o);
    CHECK(r.validation.macro_f1 > 0.95);
    CHECK((r.hidden_layers == 1 || r.hidden_layers == 2));
    CHECK(r.net.probabilities(d.inputs.leftCols(3)).colwise().sum().isApproxToConstant(1.0));

    o.layers = 2;
    CHECK(train_rule_net(d, d, RuleKey{}, o).hidden_layers == 2);
}

TEST_CASE("image architecture names") {
    CHECK(parse_image_arch("conv-lite") == ImageArch::ConvLite);
    CHECK(parse_image_arch("flattened-mlp") == ImageArch::FlattenedMlp);
    CHECK_FALSE(parse_image_arch("resnet").has_value());
    CHECK(to_string(ImageArch::FlattenedMlp) == "flattened-mlp");
}

TEST_CASE("raster matrix maps background to zero") {
    Raster r(2, 1);
    r.pixels[1] = 0;
    const std::vector<Raster> rs{r};
    const Matrix m = raster_matrix(rs);
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 0) == 1.0);
}

TEST_CASE("image encoder training leaves the autoencoder untouched") {
    const auto ps = problems(Configuration::Center, 4, 9);
    const auto panels = distinct_panels(ps);
    auto ae = small_autoencoder(Configuration::Center, 16);
    const auto before = nn::parameter_checksum(ae.encoder());
    for (auto arch : {ImageArch::ConvLite, ImageArch::FlattenedMlp}) {
        ImageEncoderOptions o;
        o.arch = arch;
        o.raster_size = 16;
        o.train.max_epochs = 2;
        const auto r = train_image_encoder(panels, panels, ae, o);
        CHECK(r.encoder.latent_dim() == 16);
        CHECK(r.encoder.encode_panels(panels, Configuration::Center).cols() == static_cast<Eigen::Index>(panels.size()));
        CHECK(r.validation.probe_size == static_cast<int>(std::min<std::size_t>(panels.size(), 100)));
        CHECK(r.validation.ratio == doctest::Approx(r.validation.mse / r.validation.mean_pairwise_sq));
        CHECK(r.validation.nearest_hit_rate >= 0.0);
        CHECK(r.validation.nearest_hit_rate <= 1.0);
    }
    CHECK(nn::parameter_checksum(ae.encoder()) == before);
}

TEST_CASE("panel collection") {
    const auto ps = problems(Configuration::Center, 5, 10);
    CHECK(collect_panels(ps).size() == 80);
    CHECK(collect_panels(ps, 20).size() == 20);
    const auto d = distinct_panels(ps);
    CHECK(d.size() <= 80);
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = i + 1; j < d.size(); ++j) CHECK_FALSE(d[i] == d[j]);
    }
    CHECK(distinct_panels(ps, 3).size() == 3);
}
