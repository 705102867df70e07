#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrpm/core.hpp"

namespace lrpm {

inline constexpr int kDatasetFormatVersion = 1;

/// Header line of a dataset file.
struct DatasetHeader {
    int format_version = kDatasetFormatVersion;
    Configuration config = Configuration::Center;
    std::uint64_t seed = 0;
    std::uint64_t first_index = 0;  // stream index of the first record
    int count = 0;
    std::string split;
};

struct Dataset {
    DatasetHeader header;
    std::vector<Problem> problems;
};

nlohmann::json panel_to_json(const Panel& panel);
Panel panel_from_json(const nlohmann::json& value, Configuration config);
nlohmann::json problem_to_json(const Problem& problem);
Problem problem_from_json(const nlohmann::json& value, Configuration config);

/// Newline-delimited JSON: a header object followed by one problem per line.
///
///   {"count":N,"configuration":"center","firstIndex":0,"format":"lrpm-dataset","formatVersion":1,"seed":7,"split":"train"}
///   {"answer":3,"context":[P,...],"index":0,"options":[P,...],"rules":[{"size":{"kind":"progression","value":1},...}]}
///
/// A panel P is a list over components of [slot, type, size, color] quadruples.
std::string serialize_dataset(const Dataset& dataset);
Dataset parse_dataset(std::string_view text);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& path);

/// Plain-text `key = value` settings; '#' starts a comment. Unknown keys are rejected.
class RunConfig {
public:
    RunConfig();

    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& path);

    /// Every key with its default value and a one-line description.
    static const std::vector<std::pair<std::string, std::pair<std::string, std::string>>>& documented_keys();

    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool has(const std::string& key) const;
    std::string render() const;

private:
    std::map<std::string, std::string> values_;
};

/// Artifact root: $LRPM_HOME when set, else "./lrpm-artifacts".
std::filesystem::path default_artifact_root();

/// Minimal CSV writer with RFC 4180 quoting.
std::string csv_row(const std::vector<std::string>& cells);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Shortest decimal form that reads back to the same double.
std::string format_number(double value);

}  // namespace lrpm
