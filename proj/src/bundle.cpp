#include "lrpm/bundle.hpp"

#include "lrpm/errors.hpp"
#include "lrpm/files.hpp"
#include "lrpm/weights.hpp"

namespace lrpm {

namespace {

constexpr const char* kManifest = "manifest.json";

nlohmann::json save_weights(const nn::Network& net, const std::filesystem::path& dir, const std::string& name,
                            const nlohmann::json& metadata) {
    nn::save_network(net, dir / name, metadata);
    return {{"file", name}, {"checksum", hex64(nn::parameter_checksum(net))}};
}

std::unique_ptr<nn::Network> load_weights(const std::filesystem::path& dir, const nlohmann::json& entry) {
    const auto name = entry.at("file").get<std::string>();
    if (name.find('/') != std::string::npos || name.find('\\') != std::string::npos) {
        throw FormatError("manifest file entry must be a bare name: " + name);
    }
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) throw FormatError("bundle is missing " + path.string());
    const std::string bytes = read_file(path);
    if (hex64(fnv1a(bytes)) != entry.at("checksum").get<std::string>()) {
        throw FormatError("checksum mismatch for " + path.string());
    }
    try {
        return nn::deserialize_network(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

nn::Mlp as_mlp(std::unique_ptr<nn::Network> net, const std::string& what) {
    auto* mlp = dynamic_cast<nn::Mlp*>(net.get());
    if (mlp == nullptr) throw FormatError(what + " is not a dense network");
    return std::move(*mlp);
}

}  // namespace

const RuleNet* ModelBundle::find(const RuleKey& key) const {
    const auto it = rule_nets.find(key);
    return it == rule_nets.end() ? nullptr : &it->second;
}

std::string rule_file_name(const RuleKey& key) {
    return "rule_c" + std::to_string(key.component) + "_" + std::string(to_string(key.attribute)) + "_" +
           std::string(to_string(key.kind)) + ".bin";
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
    nlohmann::json m;
    m["format"] = "lrpm-bundle";
    m["formatVersion"] = kBundleFormatVersion;
    m["configuration"] = std::string(to_string(bundle.config));
    m["latentDim"] = bundle.latent_dim;
    m["seed"] = bundle.seed;
    const nlohmann::json common{{"configuration", std::string(to_string(bundle.config))}, {"seed", bundle.seed}};

    if (bundle.autoencoder) {
        const auto& ae = *bundle.autoencoder;
        nlohmann::json entry;
        entry["hidden"] = ae.hidden();
        entry["encoder"] = save_weights(ae.encoder(), dir, "ae_encoder.bin", common);
        entry["decoder"] = save_weights(ae.decoder(), dir, "ae_decoder.bin", common);
        entry["metrics"] = bundle.autoencoder_metrics;
        m["autoencoder"] = entry;
    }
    nlohmann::json nets = nlohmann::json::array();
    for (const auto& [key, net] : bundle.rule_nets) {
        nlohmann::json entry = save_weights(net.classifier, dir, rule_file_name(key), common);
        entry["component"] = key.component;
        entry["componentName"] = std::string(component_layout(bundle.config, key.component).name);
        entry["attribute"] = std::string(to_string(key.attribute));
        entry["kind"] = std::string(to_string(key.kind));
        entry["classCount"] = net.class_count;
        const auto it = bundle.rule_metrics.find(key);
        entry["metrics"] = it == bundle.rule_metrics.end() ? nlohmann::json() : it->second;
        nets.push_back(entry);
    }
    m["ruleNets"] = nets;
    if (bundle.image_encoder) {
        const auto& img = *bundle.image_encoder;
        nlohmann::json entry = save_weights(*img.net, dir, "image_encoder.bin", common);
        entry["architecture"] = std::string(to_string(img.arch));
        entry["rasterSize"] = img.raster_size;
        entry["metrics"] = bundle.image_metrics;
        m["imageEncoder"] = entry;
    }
    write_file_atomic(dir / kManifest, m.dump(2) + "\n");
}

nlohmann::json read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / kManifest;
    if (!std::filesystem::exists(path)) throw MissingPrerequisite("no model bundle at " + dir.string());
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (m.value("format", "") != "lrpm-bundle") throw FormatError(path.string() + ": not a model bundle manifest");
    const int version = m.value("formatVersion", -1);
    if (version != kBundleFormatVersion) {
        throw FormatError(path.string() + ": bundle format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kBundleFormatVersion) + ")");
    }
    return m;
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    const auto m = read_manifest(dir);
    ModelBundle b;
    try {
        const auto config = parse_configuration(m.at("configuration").get<std::string>());
        if (!config) throw FormatError("unknown configuration in manifest");
        b.config = *config;
        b.latent_dim = m.at("latentDim").get<int>();
        b.seed = m.at("seed").get<std::uint64_t>();
        if (m.contains("autoencoder")) {
            const auto& e = m["autoencoder"];
            b.autoencoder.emplace(b.config, as_mlp(load_weights(dir, e.at("encoder")), "autoencoder encoder"),
                                  as_mlp(load_weights(dir, e.at("decoder")), "autoencoder decoder"));
            b.autoencoder_metrics = e.value("metrics", nlohmann::json());
        }
        for (const auto& e : m.value("ruleNets", nlohmann::json::array())) {
            const auto attr = parse_attribute(e.at("attribute").get<std::string>());
            const auto kind = parse_rule_kind(e.at("kind").get<std::string>());
            if (!attr || !kind) throw FormatError("bad rule net entry in manifest");
            const RuleKey key{e.at("component").get<int>(), *attr, *kind};
            RuleNet net{key, e.at("classCount").get<int>(), as_mlp(load_weights(dir, e), "rule net")};
            if (net.classifier.output_dim() != net.class_count) throw FormatError("rule net class count mismatch");
            b.rule_nets.emplace(key, std::move(net));
            b.rule_metrics[key] = e.value("metrics", nlohmann::json());
        }
        if (m.contains("imageEncoder")) {
            const auto& e = m["imageEncoder"];
            const auto arch = parse_image_arch(e.at("architecture").get<std::string>());
            if (!arch) throw FormatError("unknown image encoder architecture");
            b.image_encoder = ImageEncoder{*arch, e.at("rasterSize").get<int>(), load_weights(dir, e)};
            b.image_metrics = e.value("metrics", nlohmann::json());
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((dir / kManifest).string() + ": " + e.what());
    }
    return b;
}

}  // namespace lrpm
