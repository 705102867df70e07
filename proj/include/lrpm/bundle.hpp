#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>

#include "json.hpp"
#include "lrpm/trainers.hpp"

namespace lrpm {

inline constexpr int kBundleFormatVersion = 1;

/// Trained models of one configuration plus the metrics reported at training time.
struct ModelBundle {
    Configuration config = Configuration::Center;
    int latent_dim = 0;
    std::uint64_t seed = 0;

    std::optional<SymbolicAutoencoder> autoencoder;
    nlohmann::json autoencoder_metrics;

    std::map<RuleKey, RuleNet> rule_nets;
    std::map<RuleKey, nlohmann::json> rule_metrics;

    std::optional<ImageEncoder> image_encoder;
    nlohmann::json image_metrics;

    const RuleNet* find(const RuleKey& key) const;
};

std::string rule_file_name(const RuleKey& key);

/// Writes every present model as a weight file plus `manifest.json`.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);

/// Reads `dir/manifest.json` and the weight files it lists, verifying checksums.
/// Throws MissingPrerequisite when the directory holds no manifest.
ModelBundle load_bundle(const std::filesystem::path& dir);
nlohmann::json read_manifest(const std::filesystem::path& dir);

}  // namespace lrpm
