#pragma once

#include <functional>
#include <span>
#include <string>

#include "json.hpp"
#include "lrpm/bundle.hpp"
#include "lrpm/io.hpp"

namespace lrpm {

using Progress = std::function<void(const std::string&)>;

/// Shard sizes and stream offsets: train, val and test are consecutive index ranges of one seeded stream.
Dataset generate_split(Configuration config, std::uint64_t seed, const std::string& split, std::uint64_t first_index,
                       int count);

nlohmann::json to_json(const ReconstructionMetrics& m);
nlohmann::json to_json(const ClassificationReport& r);
nlohmann::json to_json(const AlignmentMetrics& m);

/// Trains E_S/D_S on panels of `train` (ae_panels of them) and replaces the bundle's
/// autoencoder. Rule nets and the image encoder are dropped since they depend on it.
void train_autoencoder_stage(ModelBundle& bundle, std::span<const Problem> train, std::span<const Problem> validation,
                             const RunConfig& cfg, const Progress& progress = {});

/// Trains one rule net per applicable key. Needs the autoencoder.
void train_rule_stage(ModelBundle& bundle, std::span<const Problem> train, std::span<const Problem> validation,
                      const RunConfig& cfg, const Progress& progress = {});

/// Trains E_X against the frozen E_S. Needs the autoencoder.
void train_image_stage(ModelBundle& bundle, std::span<const Problem> train, std::span<const Problem> validation,
                       const RunConfig& cfg, const Progress& progress = {});

}  // namespace lrpm
