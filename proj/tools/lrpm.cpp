#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "lrpm/errors.hpp"
#include "lrpm/files.hpp"
#include "lrpm/io.hpp"
#include "lrpm/pipeline.hpp"
#include "lrpm/renderer.hpp"
#include "lrpm/solver.hpp"

namespace fs = std::filesystem;
using namespace lrpm;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string modes = "c";
    std::optional<double> tau;
    std::optional<int> latent_dim;
    std::optional<int> raster_size;
    std::string out;
    std::string models;
};

RunConfig resolve_config(const Globals& g) {
    RunConfig cfg = g.config_path.empty() ? RunConfig() : RunConfig::load(g.config_path);
    if (g.seed) cfg.set("seed", std::to_string(*g.seed));
    if (g.tau) cfg.set("tau", format_number(*g.tau));
    if (g.latent_dim) cfg.set("latent_dim", std::to_string(*g.latent_dim));
    if (g.raster_size) cfg.set("raster_size", std::to_string(*g.raster_size));
    SearchConfig probe;
    probe.tau = cfg.get_double("tau");
    probe.validate();
    if (cfg.get_int("raster_size") < 16) throw UsageError("raster size must be at least 16");
    return cfg;
}

fs::path artifact_root(const RunConfig& cfg) {
    const auto& root = cfg.get("artifact_root");
    return root.empty() ? default_artifact_root() : fs::path(root);
}

Configuration require_configuration(const std::string& name) {
    const auto c = parse_configuration(name);
    if (!c) {
        throw UsageError("unknown configuration '" + name +
                         "' (expected center, left_right, up_down, out_in_center, grid2x2, grid3x3 or out_in_grid)");
    }
    return *c;
}

std::vector<SolveMode> require_modes(const std::string& text) {
    std::vector<SolveMode> out;
    for (char ch : text) {
        if (ch == ',' || ch == ' ') continue;
        const auto m = parse_solve_mode(std::string(1, ch));
        if (!m) throw UsageError("unknown mode '" + std::string(1, ch) + "' (expected a, b or c)");
        if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
    }
    if (out.empty()) throw UsageError("no mode given");
    return out;
}

Dataset load_data(const fs::path& path) {
    if (!fs::exists(path)) throw UsageError("dataset not found: " + path.string());
    return read_dataset(path);
}

// A data argument is a shard file or a directory with train.jsonl and optionally val.jsonl.
std::pair<Dataset, Dataset> load_training_data(const fs::path& path) {
    if (fs::is_directory(path)) {
        Dataset train = load_data(path / "train.jsonl");
        Dataset val;
        if (fs::exists(path / "val.jsonl")) val = load_data(path / "val.jsonl");
        val.header.config = train.header.config;
        return {std::move(train), std::move(val)};
    }
    Dataset train = load_data(path);
    Dataset val;
    val.header.config = train.header.config;
    return {std::move(train), std::move(val)};
}

fs::path models_dir(const Globals& g, const RunConfig& cfg, Configuration config) {
    if (!g.models.empty()) return g.models;
    return artifact_root(cfg) / "models" / std::string(to_string(config));
}

void check_bundle_matches(const ModelBundle& b, Configuration config) {
    if (b.config != config) {
        throw UsageError("model bundle is for " + std::string(to_string(b.config)) + " but the dataset is " +
                         std::string(to_string(config)));
    }
}

SearchConfig search_config(const RunConfig& cfg) {
    SearchConfig s;
    s.tau = cfg.get_double("tau");
    s.validate();
    return s;
}

const Progress kPrint = [](const std::string& line) { std::cout << line << std::endl; };

int cmd_gen(const Globals& g, const std::string& config_name, std::optional<int> count) {
    const auto config = require_configuration(config_name);
    const auto cfg = resolve_config(g);
    const auto seed = cfg.get_u64("seed");
    if (count) {
        if (*count < 0) throw UsageError("count must be non-negative");
        const fs::path out = g.out.empty() ? artifact_root(cfg) / "data" / std::string(to_string(config)) / "problems.jsonl"
                                           : fs::path(g.out);
        write_dataset(out, generate_split(config, seed, "all", 0, *count));
        std::cout << "wrote " << out.string() << " (" << *count << " problems)\n";
        return 0;
    }
    const fs::path dir = g.out.empty() ? artifact_root(cfg) / "data" / std::string(to_string(config)) : fs::path(g.out);
    std::uint64_t first = 0;
    for (const std::string split : {"train", "val", "test"}) {
        const int n = cfg.get_int(split + "_count");
        write_dataset(dir / (split + ".jsonl"), generate_split(config, seed, split, first, n));
        std::cout << "wrote " << (dir / (split + ".jsonl")).string() << " (" << n << " problems)\n";
        first += static_cast<std::uint64_t>(n);
    }
    return 0;
}

void print_rule_summary(const ModelBundle& b) {
    int good = 0;
    for (const auto& [key, m] : b.rule_metrics) good += m.value("macroF1", 0.0) >= 0.9 ? 1 : 0;
    std::cout << good << " of " << b.rule_metrics.size() << " rule nets reach held-out F1 >= 0.90\n";
}

int cmd_train(const Globals& g, const std::string& stage, const std::string& data_path) {
    const auto cfg = resolve_config(g);
    auto [train, val] = load_training_data(data_path);
    const auto config = train.header.config;
    if (!val.problems.empty() && val.header.config != config) throw UsageError("train and val shards differ in configuration");
    const fs::path dir = g.out.empty() ? models_dir(g, cfg, config) : fs::path(g.out);

    if (stage == "ae") {
        ModelBundle b;
        train_autoencoder_stage(b, train.problems, val.problems, cfg, kPrint);
        save_bundle(b, dir);
    } else if (stage == "rules" || stage == "img") {
        ModelBundle b = load_bundle(dir);
        check_bundle_matches(b, config);
        if (stage == "rules") {
            train_rule_stage(b, train.problems, val.problems, cfg, kPrint);
            print_rule_summary(b);
        } else {
            train_image_stage(b, train.problems, val.problems, cfg, kPrint);
        }
        save_bundle(b, dir);
    } else {
        throw UsageError("unknown training stage '" + stage + "' (expected ae, rules or img)");
    }
    std::cout << "saved bundle " << dir.string() << "\n";
    return 0;
}

int cmd_solve(const Globals& g, const std::string& data_path) {
    const auto cfg = resolve_config(g);
    const auto data = load_data(data_path);
    const auto modes = require_modes(g.modes);
    if (modes.size() != 1) throw UsageError("solve takes exactly one mode");
    const auto bundle = load_bundle(models_dir(g, cfg, data.header.config));
    check_bundle_matches(bundle, data.header.config);
    const auto outcomes = solve_all(data.problems, modes.front(), bundle, search_config(cfg));
    std::string csv = csv_row({"index", "answer", "expected", "flag"});
    int correct = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        const std::string flag = o.empty_rule_set ? "empty_rule_set" : (o.no_consistent_rules ? "no_consistent_rules" : "");
        csv += csv_row({std::to_string(data.header.first_index + i), std::to_string(o.answer),
                        std::to_string(data.problems[i].answer), flag});
        correct += o.answer == data.problems[i].answer ? 1 : 0;
    }
    if (g.out.empty()) {
        std::cout << csv;
    } else {
        write_file_atomic(g.out, csv);
        std::cout << "wrote " << g.out << "\n";
    }
    std::cerr << correct << " of " << outcomes.size() << " answers match the dataset\n";
    return 0;
}

int cmd_eval(const Globals& g, const std::string& data_path) {
    const auto cfg = resolve_config(g);
    const auto data = load_data(data_path);
    const auto modes = require_modes(g.modes);
    const auto bundle = load_bundle(models_dir(g, cfg, data.header.config));
    check_bundle_matches(bundle, data.header.config);
    const auto scfg = search_config(cfg);
    const fs::path root = g.out.empty() ? artifact_root(cfg) / "reports" : fs::path(g.out);
    for (auto mode : modes) {
        const auto report = evaluate(data.problems, mode, bundle, scfg);
        const auto dir = root / (std::string(to_string(data.header.config)) + "_" + std::string(to_string(mode)));
        write_report(report, dir);
        std::cout << format_report(report) << "report written to " << dir.string() << "\n\n";
    }
    return 0;
}

int cmd_render(const Globals& g, const std::string& data_path, int from, std::optional<int> to) {
    const auto cfg = resolve_config(g);
    const auto data = load_data(data_path);
    const int end = to.value_or(from + 1);
    const int n = static_cast<int>(data.problems.size());
    if (from < 0 || from >= n || end <= from || end > n) {
        throw UsageError("index range [" + std::to_string(from) + ", " + std::to_string(end) + ") is outside 0.." +
                         std::to_string(n));
    }
    const int size = cfg.get_int("raster_size");
    const fs::path dir = g.out.empty() ? artifact_root(cfg) / "renders" / std::string(to_string(data.header.config))
                                       : fs::path(g.out);
    for (int i = from; i < end; ++i) {
        const auto& p = data.problems[static_cast<std::size_t>(i)];
        char stem[32];
        std::snprintf(stem, sizeof stem, "problem_%05d", i);
        write_pgm(dir / (std::string(stem) + ".pgm"), render_problem_sheet(p, size));
        for (int k = 0; k < kContextPanels; ++k) {
            write_pgm(dir / (std::string(stem) + "_context_" + std::to_string(k) + ".pgm"),
                      render_panel(p.context[static_cast<std::size_t>(k)], p.config, size));
        }
        for (int k = 0; k < kOptionCount; ++k) {
            write_pgm(dir / (std::string(stem) + "_option_" + std::to_string(k) + ".pgm"),
                      render_panel(p.options[static_cast<std::size_t>(k)], p.config, size));
        }
    }
    std::cout << "rendered " << (end - from) << " problem(s) to " << dir.string() << "\n";
    return 0;
}

std::vector<fs::path> find_reports(const std::vector<std::string>& roots) {
    std::set<fs::path> out;
    for (const auto& r : roots) {
        if (!fs::exists(r)) throw UsageError("report directory not found: " + r);
        if (fs::exists(fs::path(r) / "accuracy.csv")) out.insert(r);
        if (!fs::is_directory(r)) continue;
        for (const auto& e : fs::recursive_directory_iterator(r)) {
            if (e.path().filename() == "accuracy.csv") out.insert(e.path().parent_path());
        }
    }
    if (out.empty()) throw UsageError("no evaluation reports found");
    return {out.begin(), out.end()};
}

int cmd_report(const Globals& g, const std::vector<std::string>& roots) {
    const auto dirs = find_reports(roots);
    std::map<std::pair<SolveMode, Configuration>, std::string> cells;
    std::set<SolveMode> modes;
    std::set<Configuration> configs;
    std::string accuracy = csv_row({"configuration", "mode", "problems", "scored", "correct", "accuracy", "degenerate",
                                    "empty_rule_set", "no_consistent_rules"});
    std::string f1 = csv_row({"configuration", "mode", "component", "attribute", "kind", "classes", "support", "macro_f1",
                              "accuracy", "latents"});
    // F1 per (configuration, latent source, net) so that repeated modes count once.
    std::map<std::tuple<std::string, std::string, std::string, std::string, std::string>, double> nets;
    for (const auto& dir : dirs) {
        const auto rows = parse_csv(read_file(dir / "accuracy.csv"));
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.size() < 9) throw FormatError((dir / "accuracy.csv").string() + ": short row");
            const auto config = require_configuration(r[0]);
            const auto mode = parse_solve_mode(r[1]);
            if (!mode) throw FormatError((dir / "accuracy.csv").string() + ": bad mode");
            modes.insert(*mode);
            configs.insert(config);
            std::ostringstream cell;
            cell.setf(std::ios::fixed);
            cell.precision(2);
            if (r[5].empty()) {
                cells[{*mode, config}] = "n/a";
            } else {
                cell << 100.0 * std::stod(r[5]);
                cells[{*mode, config}] = cell.str();
            }
            accuracy += csv_row(r);
        }
        if (fs::exists(dir / "f1.csv")) {
            const auto f = parse_csv(read_file(dir / "f1.csv"));
            for (std::size_t i = 1; i < f.size(); ++i) {
                if (f[i].size() < 10) throw FormatError((dir / "f1.csv").string() + ": short row");
                nets[{f[i][0], f[i][9], f[i][2], f[i][3], f[i][4]}] = std::stod(f[i][7]);
                f1 += csv_row(f[i]);
            }
        }
    }

    std::ostringstream s;
    s << "Configuration wise accuracy (%)\n";
    s << std::left;
    s.width(22);
    s << "Mode";
    for (auto c : configs) {
        s.width(16);
        s << std::string(short_name(c));
    }
    s << "\n";
    for (auto m : modes) {
        s.width(22);
        s << std::string(mode_label(m));
        for (auto c : configs) {
            const auto it = cells.find({m, c});
            s.width(16);
            s << (it == cells.end() ? std::string("-") : it->second);
        }
        s << "\n";
    }
    if (!nets.empty()) {
        std::map<std::pair<std::string, std::string>, std::pair<int, int>> per;  // (config, latents) -> good, total
        for (const auto& [k, v] : nets) {
            auto& [good, total] = per[{std::get<0>(k), std::get<1>(k)}];
            good += v >= 0.9 ? 1 : 0;
            ++total;
        }
        s << "\nRule nets with F1 >= 0.90\n";
        std::map<std::string, std::pair<int, int>> by_source;
        for (const auto& [k, v] : per) {
            s << "  " << k.first << " (" << k.second << "): " << v.first << " of " << v.second << "\n";
            by_source[k.second].first += v.first;
            by_source[k.second].second += v.second;
        }
        for (const auto& [src, v] : by_source) {
            s.precision(1);
            s.setf(std::ios::fixed);
            s << "  all configurations (" << src << "): " << v.first << " of " << v.second << " ("
              << 100.0 * v.first / v.second << "%)\n";
        }
    }
    std::cout << s.str();
    if (!g.out.empty()) {
        write_file_atomic(fs::path(g.out) / "summary.txt", s.str());
        write_file_atomic(fs::path(g.out) / "accuracy.csv", accuracy);
        write_file_atomic(fs::path(g.out) / "f1.csv", f1);
        std::cout << "combined report written to " << g.out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neuro-symbolic Raven-style matrix generator, trainer and solver"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "key = value run configuration file");
    app.add_option("--seed", g.seed, "master seed (overrides the config)");
    app.add_option("--mode", g.modes, "solve mode: a, b or c (eval accepts several, e.g. abc)");
    app.add_option("--tau", g.tau, "binary rule acceptance threshold");
    app.add_option("--latent-dim", g.latent_dim, "symbolic latent size");
    app.add_option("--raster-size", g.raster_size, "panel image side in pixels");
    app.add_option("--out", g.out, "output file or directory");
    app.add_option("--models", g.models, "model bundle directory (default: <root>/models/<configuration>)");

    std::function<int()> run;

    auto* gen = app.add_subcommand("gen", "generate problems: train/val/test shards, or COUNT problems in one file");
    std::string gen_config;
    std::optional<int> gen_count;
    gen->add_option("configuration", gen_config)->required();
    gen->add_option("count", gen_count);
    gen->callback([&] { run = [&] { return cmd_gen(g, gen_config, gen_count); }; });

    auto* train = app.add_subcommand("train", "train a stage: ae, rules or img");
    std::string stage;
    std::string train_data;
    train->add_option("stage", stage)->required()->check(CLI::IsMember({"ae", "rules", "img"}));
    train->add_option("data", train_data, "shard file or directory holding train.jsonl and val.jsonl")->required();
    train->callback([&] { run = [&] { return cmd_train(g, stage, train_data); }; });

    auto* solve = app.add_subcommand("solve", "print the chosen option of every problem");
    std::string solve_data;
    solve->add_option("data", solve_data)->required();
    solve->callback([&] { run = [&] { return cmd_solve(g, solve_data); }; });

    auto* eval = app.add_subcommand("eval", "accuracy, rule net F1 and inference counts for a dataset");
    std::string eval_data;
    eval->add_option("data", eval_data)->required();
    eval->callback([&] { run = [&] { return cmd_eval(g, eval_data); }; });

    auto* render = app.add_subcommand("render", "write a sheet and 16 panel images per problem (PGM)");
    std::string render_data;
    int from = 0;
    std::optional<int> to;
    render->add_option("data", render_data)->required();
    render->add_option("--from", from, "first problem index");
    render->add_option("--to", to, "one past the last problem index (default: from + 1)");
    render->callback([&] { run = [&] { return cmd_render(g, render_data, from, to); }; });

    auto* report = app.add_subcommand("report", "combine evaluation reports into one table");
    std::vector<std::string> report_dirs;
    report->add_option("dirs", report_dirs)->required();
    report->callback([&] { run = [&] { return cmd_report(g, report_dirs); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return run();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
