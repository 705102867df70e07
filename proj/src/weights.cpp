#include "lrpm/weights.hpp"

#include <bit>
#include <cstring>

#include "lrpm/conv.hpp"
#include "lrpm/errors.hpp"
#include "lrpm/files.hpp"

namespace lrpm::nn {

namespace {

constexpr char kMagic[8] = {'L', 'R', 'P', 'M', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kMlp = 1;
constexpr std::uint32_t kConvLite = 2;
constexpr std::uint32_t kDenseLayer = 1;
constexpr std::uint32_t kConvLayer = 2;

template <typename T>
void put(std::string& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        out.append(bytes.data(), bytes.size());
    } else {
        char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        out.append(bytes, sizeof(T));
    }
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        if (at_ + sizeof(T) > bytes_.size()) throw FormatError("weight file truncated");
        std::array<char, sizeof(T)> raw;
        std::memcpy(raw.data(), bytes_.data() + at_, sizeof(T));
        at_ += sizeof(T);
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    }

    std::string_view take(std::size_t n) {
        if (at_ + n > bytes_.size()) throw FormatError("weight file truncated");
        auto out = bytes_.substr(at_, n);
        at_ += n;
        return out;
    }

    bool done() const { return at_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t at_ = 0;
};

void put_matrix(std::string& out, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) put(out, m(r, c));
    }
}

Matrix get_matrix(Reader& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = in.get<double>();
    }
    return m;
}

void put_dense(std::string& out, const DenseLayer& l) {
    put(out, kDenseLayer);
    put(out, static_cast<std::uint32_t>(l.activation));
    put(out, static_cast<std::uint32_t>(l.weights.rows()));
    put(out, static_cast<std::uint32_t>(l.weights.cols()));
    put_matrix(out, l.weights);
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) put(out, l.biases(i));
}

Activation get_activation(Reader& in) {
    const auto raw = in.get<std::uint32_t>();
    if (raw > 1) throw FormatError("unknown activation code " + std::to_string(raw));
    return static_cast<Activation>(raw);
}

std::string_view activation_name(Activation a) { return a == Activation::Relu ? "relu" : "identity"; }

}  // namespace

std::string serialize_network(const Network& net) {
    std::string out(kMagic, sizeof kMagic);
    put(out, kWeightFormatVersion);
    if (const auto* mlp = dynamic_cast<const Mlp*>(&net)) {
        put(out, kMlp);
        put(out, static_cast<std::uint32_t>(mlp->layers().size()));
        for (const auto& l : mlp->layers()) put_dense(out, l);
        return out;
    }
    if (const auto* conv = dynamic_cast<const ConvEncoder*>(&net)) {
        put(out, kConvLite);
        put(out, static_cast<std::uint32_t>(conv->side()));
        put(out, static_cast<std::uint32_t>(conv->stages().size() + conv->head().layers().size()));
        for (const auto& s : conv->stages()) {
            put(out, kConvLayer);
            put(out, static_cast<std::uint32_t>(Activation::Relu));
            put(out, static_cast<std::uint32_t>(s.out_channels));
            put(out, static_cast<std::uint32_t>(s.in_channels));
            put_matrix(out, s.weights);
            for (Eigen::Index i = 0; i < s.biases.size(); ++i) put(out, s.biases(i));
        }
        for (const auto& l : conv->head().layers()) put_dense(out, l);
        return out;
    }
    throw UsageError("network type has no weight serialization");
}

std::unique_ptr<Network> deserialize_network(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw FormatError("not a weight file");
    const auto version = in.get<std::uint32_t>();
    if (version != kWeightFormatVersion) {
        throw FormatError("weight format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kWeightFormatVersion) + ")");
    }
    const auto kind = in.get<std::uint32_t>();
    if (kind != kMlp && kind != kConvLite) throw FormatError("unknown network kind " + std::to_string(kind));
    std::uint32_t side = 0;
    if (kind == kConvLite) side = in.get<std::uint32_t>();
    const auto count = in.get<std::uint32_t>();
    std::vector<ConvStage> stages;
    std::vector<DenseLayer> dense;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto layer_kind = in.get<std::uint32_t>();
        const Activation act = get_activation(in);
        const auto rows = in.get<std::uint32_t>();
        const auto cols = in.get<std::uint32_t>();
        if (layer_kind == kConvLayer) {
            if (kind != kConvLite || !dense.empty()) throw FormatError("unexpected convolution layer");
            ConvStage s;
            s.out_channels = static_cast<int>(rows);
            s.in_channels = static_cast<int>(cols);
            s.weights = get_matrix(in, rows, static_cast<Eigen::Index>(cols) * 9);
            s.biases = get_matrix(in, rows, 1).col(0);
            stages.push_back(std::move(s));
        } else if (layer_kind == kDenseLayer) {
            DenseLayer l;
            l.activation = act;
            l.weights = get_matrix(in, rows, cols);
            l.biases = get_matrix(in, rows, 1).col(0);
            dense.push_back(std::move(l));
        } else {
            throw FormatError("unknown layer kind " + std::to_string(layer_kind));
        }
    }
    if (!in.done()) throw FormatError("trailing bytes after weight data");
    if (kind == kMlp) return std::make_unique<Mlp>(std::move(dense));
    return std::make_unique<ConvEncoder>(static_cast<int>(side), std::move(stages), Mlp(std::move(dense)));
}

void save_network(const Network& net, const std::filesystem::path& path, const nlohmann::json& metadata) {
    const std::string bytes = serialize_network(net);
    nlohmann::json sidecar;
    sidecar["format"] = "lrpm-weights";
    sidecar["formatVersion"] = kWeightFormatVersion;
    sidecar["byteOrder"] = "little-endian";
    sidecar["checksum"] = hex64(fnv1a(bytes));
    nlohmann::json layers = nlohmann::json::array();
    if (const auto* conv = dynamic_cast<const ConvEncoder*>(&net)) {
        sidecar["network"] = "conv-lite";
        sidecar["inputSide"] = conv->side();
        for (const auto& s : conv->stages()) {
            layers.push_back({{"kind", "conv3x3+relu+avgpool2"}, {"in", s.in_channels}, {"out", s.out_channels}});
        }
        for (const auto& l : conv->head().layers()) {
            layers.push_back({{"kind", "dense"}, {"in", l.weights.cols()}, {"out", l.weights.rows()},
                              {"activation", activation_name(l.activation)}});
        }
    } else if (const auto* mlp = dynamic_cast<const Mlp*>(&net)) {
        sidecar["network"] = "mlp";
        for (const auto& l : mlp->layers()) {
            layers.push_back({{"kind", "dense"}, {"in", l.weights.cols()}, {"out", l.weights.rows()},
                              {"activation", activation_name(l.activation)}});
        }
    }
    sidecar["layers"] = layers;
    if (!metadata.is_null()) sidecar["metadata"] = metadata;
    write_file_atomic(path, bytes);
    auto side_path = path;
    side_path += ".json";
    write_file_atomic(side_path, sidecar.dump(2) + "\n");
}

std::unique_ptr<Network> load_network(const std::filesystem::path& path) {
    try {
        return deserialize_network(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::uint64_t parameter_checksum(const Network& net) { return fnv1a(serialize_network(net)); }

}  // namespace lrpm::nn
