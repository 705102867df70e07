#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "json.hpp"
#include "lrpm/nn.hpp"

namespace lrpm::nn {

/// Binary weight file layout, all integers u32 and all reals f64, little-endian:
///
///   magic "LRPMNET\0" (8 bytes)
///   format version                (currently 1)
///   network kind                  1 = mlp, 2 = conv-lite
///   input side                    conv-lite only
///   layer count
///   per layer:
///     layer kind                  1 = dense, 2 = conv3x3 + relu + 2x2 average pool
///     activation                  0 = identity, 1 = relu
///     rows, cols                  dense: out, in; conv: out channels, in channels
///     weights                     row-major, rows x cols (x 9 for conv)
///     biases                      rows values
///
/// Conv stages precede the dense head layers.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

std::string serialize_network(const Network& net);
std::unique_ptr<Network> deserialize_network(std::string_view bytes);

/// Writes `path` and a JSON sidecar `path + ".json"` describing the layers plus `metadata`.
void save_network(const Network& net, const std::filesystem::path& path, const nlohmann::json& metadata = {});
std::unique_ptr<Network> load_network(const std::filesystem::path& path);

std::uint64_t parameter_checksum(const Network& net);

}  // namespace lrpm::nn
