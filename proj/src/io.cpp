#include "lrpm/io.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>

#include "lrpm/errors.hpp"
#include "lrpm/files.hpp"

namespace lrpm {

using nlohmann::json;

namespace {

const char* kDatasetTag = "lrpm-dataset";

template <typename T>
T required(const json& object, const char* key) {
    if (!object.is_object() || !object.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    try {
        return object.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("field '") + key + "' has the wrong type");
    }
}

json rules_to_json(const RuleAssignment& rules) {
    json out = json::object();
    for (const auto& [attr, rule] : rules) {
        out[std::string(to_string(attr))] = {{"kind", std::string(to_string(rule.kind))}, {"value", rule.value}};
    }
    return out;
}

RuleAssignment rules_from_json(const json& value) {
    if (!value.is_object()) throw FormatError("rules must be an object");
    RuleAssignment out;
    for (const auto& [key, entry] : value.items()) {
        const auto attr = parse_attribute(key);
        if (!attr) throw FormatError("unknown attribute '" + key + "'");
        const auto kind = parse_rule_kind(required<std::string>(entry, "kind"));
        if (!kind) throw FormatError("unknown rule kind in '" + key + "'");
        const int v = required<int>(entry, "value");
        if (!rule_value_legal(*kind, v)) throw FormatError("illegal rule value for '" + key + "'");
        out[*attr] = RuleInstance{*attr, *kind, v};
    }
    return out;
}

std::uint64_t parse_u64(std::string_view text) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) throw UsageError("not an unsigned integer: '" + std::string(text) + "'");
    return v;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

json panel_to_json(const Panel& panel) {
    json out = json::array();
    for (const auto& comp : panel.components) {
        json entities = json::array();
        for (const auto& [slot, e] : comp.entities) entities.push_back({slot, e.type, e.size, e.color});
        out.push_back(entities);
    }
    return out;
}

Panel panel_from_json(const json& value, Configuration config) {
    if (!value.is_array()) throw FormatError("panel must be an array of components");
    Panel panel;
    for (const auto& comp : value) {
        if (!comp.is_array()) throw FormatError("component must be an array of entities");
        ComponentState state;
        for (const auto& entity : comp) {
            if (!entity.is_array() || entity.size() != 4) throw FormatError("entity must be [slot, type, size, color]");
            for (const auto& x : entity) {
                if (!x.is_number_integer()) throw FormatError("entity fields must be integers");
            }
            const int slot = entity[0].get<int>();
            if (!state.occupancy.insert(slot).second) throw FormatError("duplicate slot in component");
            state.entities[slot] = Entity{entity[1].get<int>(), entity[2].get<int>(), entity[3].get<int>()};
        }
        panel.components.push_back(std::move(state));
    }
    const auto violations = validate_panel(panel, config);
    if (!violations.empty()) throw FormatError("invalid panel: " + violations.front());
    return panel;
}

json problem_to_json(const Problem& problem) {
    json context = json::array();
    for (const auto& p : problem.context) context.push_back(panel_to_json(p));
    json options = json::array();
    for (const auto& p : problem.options) options.push_back(panel_to_json(p));
    json rules = json::array();
    for (const auto& r : problem.rules) rules.push_back(rules_to_json(r));
    return {{"context", context}, {"options", options}, {"answer", problem.answer}, {"rules", rules}};
}

Problem problem_from_json(const json& value, Configuration config) {
    Problem problem;
    problem.config = config;
    const auto context = required<json>(value, "context");
    const auto options = required<json>(value, "options");
    if (!context.is_array() || context.size() != kContextPanels) throw FormatError("context must hold 8 panels");
    if (!options.is_array() || options.size() != kOptionCount) throw FormatError("options must hold 8 panels");
    for (std::size_t i = 0; i < kContextPanels; ++i) problem.context[i] = panel_from_json(context[i], config);
    for (std::size_t i = 0; i < kOptionCount; ++i) problem.options[i] = panel_from_json(options[i], config);
    problem.answer = required<int>(value, "answer");
    if (problem.answer < 0 || problem.answer >= kOptionCount) throw FormatError("answer index out of range");
    const auto rules = required<json>(value, "rules");
    if (!rules.is_array() || static_cast<int>(rules.size()) != component_count(config)) {
        throw FormatError("rules must list one object per component");
    }
    for (const auto& r : rules) problem.rules.push_back(rules_from_json(r));
    return problem;
}

std::string serialize_dataset(const Dataset& dataset) {
    const auto& h = dataset.header;
    if (h.count != static_cast<int>(dataset.problems.size())) throw UsageError("dataset header count does not match");
    json header = {{"format", kDatasetTag},
                   {"formatVersion", h.format_version},
                   {"configuration", std::string(to_string(h.config))},
                   {"seed", h.seed},
                   {"firstIndex", h.first_index},
                   {"count", h.count},
                   {"split", h.split}};
    std::string out = header.dump() + "\n";
    for (std::size_t i = 0; i < dataset.problems.size(); ++i) {
        if (dataset.problems[i].config != h.config) throw UsageError("problem configuration differs from header");
        json record = problem_to_json(dataset.problems[i]);
        record["index"] = h.first_index + i;
        out += record.dump();
        out += '\n';
    }
    return out;
}

Dataset parse_dataset(std::string_view text) {
    Dataset dataset;
    std::size_t line_no = 0;
    std::size_t at = 0;
    bool have_header = false;
    while (at < text.size()) {
        std::size_t end = text.find('\n', at);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(at, end - at);
        at = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json value;
        try {
            value = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!have_header) {
                if (required<std::string>(value, "format") != kDatasetTag) throw FormatError("not a dataset file");
                auto& h = dataset.header;
                h.format_version = required<int>(value, "formatVersion");
                if (h.format_version != kDatasetFormatVersion) {
                    throw FormatError("dataset format version " + std::to_string(h.format_version) +
                                      " is not supported (expected " + std::to_string(kDatasetFormatVersion) + ")");
                }
                const auto config = parse_configuration(required<std::string>(value, "configuration"));
                if (!config) throw FormatError("unknown configuration");
                h.config = *config;
                h.seed = required<std::uint64_t>(value, "seed");
                h.first_index = value.value("firstIndex", std::uint64_t{0});
                h.count = required<int>(value, "count");
                h.split = value.value("split", std::string{});
                have_header = true;
                continue;
            }
            const auto index = required<std::uint64_t>(value, "index");
            if (index != dataset.header.first_index + dataset.problems.size()) throw FormatError("record index out of sequence");
            dataset.problems.push_back(problem_from_json(value, dataset.header.config));
        } catch (const FormatError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw FormatError("dataset has no header");
    if (static_cast<int>(dataset.problems.size()) != dataset.header.count) {
        throw FormatError("dataset header announces " + std::to_string(dataset.header.count) + " records, found " +
                          std::to_string(dataset.problems.size()));
    }
    return dataset;
}

void write_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    write_file_atomic(path, serialize_dataset(dataset));
}

Dataset read_dataset(const std::filesystem::path& path) {
    try {
        return parse_dataset(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

const std::vector<std::pair<std::string, std::pair<std::string, std::string>>>& RunConfig::documented_keys() {
    static const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> keys{
        {"artifact_root", {"", "directory for datasets, bundles and reports (empty: $LRPM_HOME or ./lrpm-artifacts)"}},
        {"seed", {"0", "master seed for generation and training"}},
        {"train_count", {"6000", "problems in the train shard"}},
        {"val_count", {"2000", "problems in the validation shard"}},
        {"test_count", {"2000", "problems in the test shard"}},
        {"latent_dim", {"0", "symbolic latent size (0: per-configuration default)"}},
        {"raster_size", {"64", "panel image side in pixels"}},
        {"tau", {"0.5", "acceptance threshold for binary rule nets"}},
        {"ae_panels", {"6000", "training panels for the autoencoder"}},
        {"ae_hidden", {"0", "autoencoder hidden width (0: affine encoder and decoder)"}},
        {"ae_epochs", {"300", "autoencoder epoch limit"}},
        {"ae_batch", {"64", "autoencoder batch size"}},
        {"ae_lr", {"0.005", "autoencoder learning rate"}},
        {"ae_decay", {"0.1", "autoencoder weight decay"}},
        {"ae_patience", {"30", "autoencoder early-stopping patience"}},
        {"rule_hidden", {"64", "rule net hidden width"}},
        {"rule_layers", {"1", "rule net hidden layers (0: pick 1 or 2 on validation F1)"}},
        {"rule_epochs", {"60", "rule net epoch limit"}},
        {"rule_batch", {"64", "rule net batch size"}},
        {"rule_lr", {"0.002", "rule net learning rate"}},
        {"rule_patience", {"8", "rule net early-stopping patience"}},
        {"rule_decay", {"0.0", "rule net weight decay"}},
        {"rule_forced", {"300", "extra generated problems per rule net with that rule forced"}},
        {"rule_option_problems", {"1500", "train problems whose row 3, completed by each option, is added to rule training"}},
        {"img_arch", {"conv-lite", "image encoder: conv-lite or flattened-mlp"}},
        {"img_panels", {"6000", "training panels for the image encoder"}},
        {"img_epochs", {"0", "image encoder epoch limit (0: about 120,000 panel presentations, at least 20 epochs)"}},
        {"img_batch", {"16", "image encoder batch size"}},
        {"img_lr", {"0.002", "image encoder learning rate"}},
        {"img_patience", {"30", "image encoder early-stopping patience"}},
    };
    return keys;
}

RunConfig::RunConfig() {
    for (const auto& [key, info] : documented_keys()) values_[key] = info.first;
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig cfg;
    std::size_t at = 0;
    int line_no = 0;
    while (at <= text.size()) {
        std::size_t end = text.find('\n', at);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(at, end - at);
        at = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        try {
            cfg.set(trim(std::string_view(content).substr(0, eq)), trim(std::string_view(content).substr(eq + 1)));
        } catch (const UsageError& e) {
            throw UsageError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw UsageError("config file not found: " + path.string());
    return parse(read_file(path));
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!values_.contains(key)) throw UsageError("unknown config key '" + key + "'");
    values_[key] = value;
    // Validate eagerly so that typos surface at load time.
    const std::string& def = std::find_if(documented_keys().begin(), documented_keys().end(),
                                          [&](const auto& kv) { return kv.first == key; })
                                 ->second.first;
    if (key == "artifact_root" || key == "img_arch") {
        if (key == "img_arch" && value != "conv-lite" && value != "flattened-mlp") {
            throw UsageError("img_arch must be conv-lite or flattened-mlp");
        }
        return;
    }
    if (def.find('.') != std::string::npos) {
        (void)get_double(key);
    } else {
        (void)get_u64(key);
    }
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const {
    const auto v = get_u64(key);
    if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) throw UsageError(key + " is too large");
    return static_cast<int>(v);
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& text = get(key);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(v)) {
        throw UsageError(key + ": not a number: '" + text + "'");
    }
    return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    try {
        return parse_u64(get(key));
    } catch (const UsageError&) {
        throw UsageError(key + ": not a non-negative integer: '" + get(key) + "'");
    }
}

bool RunConfig::has(const std::string& key) const { return values_.contains(key); }

std::string RunConfig::render() const {
    std::string out;
    for (const auto& [key, info] : documented_keys()) out += "# " + info.second + "\n" + key + " = " + values_.at(key) + "\n";
    return out;
}

std::filesystem::path default_artifact_root() {
    if (const char* home = std::getenv("LRPM_HOME"); home != nullptr && *home != '\0') return home;
    return "lrpm-artifacts";
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out += ',';
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\n") == std::string::npos) {
            out += c;
        } else {
            out += '"';
            for (char ch : c) {
                if (ch == '"') out += '"';
                out += ch;
            }
            out += '"';
        }
    }
    out += '\n';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        any = true;
        if (quoted) {
            if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (ch == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    if (any) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_number(double value) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    (void)ec;
    return std::string(buf, end);
}

}  // namespace lrpm
