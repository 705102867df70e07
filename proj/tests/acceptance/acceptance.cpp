// Acceptance run: prints one PASS/FAIL line per criterion, exits 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lrpm/bundle.hpp"
#include "lrpm/conv.hpp"
#include "lrpm/encoding.hpp"
#include "lrpm/generator.hpp"
#include "lrpm/io.hpp"
#include "lrpm/oracle.hpp"
#include "lrpm/pipeline.hpp"
#include "lrpm/solver.hpp"
#include "lrpm/trainers.hpp"

namespace fs = std::filesystem;
using namespace lrpm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pct(double fraction) { return fixed(100.0 * fraction) + "%"; }

struct Verdict {
    int id = 0;
    std::string title;
    bool pass = true;
    bool ran = false;

    void check(bool ok, const std::string& line) {
        ran = true;
        pass = pass && ok;
        std::cout << (ok ? "  ok   " : "  FAIL ") << line << std::endl;
    }
    void note(const std::string& line) const { std::cout << "  --   " << line << std::endl; }
};

void log(const std::string& line) { std::cerr << "[acceptance] " << line << std::endl; }

bool is_grid(Configuration c) {
    return c == Configuration::Grid2x2 || c == Configuration::Grid3x3 || c == Configuration::OutInGrid;
}

/// Uniform over slot counts, slot subsets and entity attributes; independent of the generator.
Panel random_panel(Configuration config, Rng& rng) {
    Panel p;
    for (const auto& layout : components(config)) {
        ComponentState state;
        std::vector<int> slots(static_cast<std::size_t>(layout.slots));
        for (int i = 0; i < layout.slots; ++i) slots[static_cast<std::size_t>(i)] = i;
        rng.shuffle(std::span<int>(slots));
        const int n = rng.uniform_int(1, layout.slots);
        for (int i = 0; i < n; ++i) {
            const int slot = slots[static_cast<std::size_t>(i)];
            Entity e{rng.uniform_int(0, kTypeCount - 1), rng.uniform_int(0, kSizeCount - 1),
                     rng.uniform_int(0, kColorCount - 1)};
            if (layout.profile == ComponentProfile::Outer) e.color = 0;
            state.occupancy.insert(slot);
            state.entities[slot] = e;
        }
        p.components.push_back(std::move(state));
    }
    return p;
}

// ---------------------------------------------------------------- criterion 1

void oracle_soundness(Verdict& v, std::uint64_t seed, std::map<Configuration, Dataset>& generated) {
    const auto start = Clock::now();
    for (auto config : kAllConfigurations) {
        auto data = generate_split(config, seed, "test", 0, 1000);
        int solved = 0;
        for (const auto& p : data.problems) solved += oracle::solve_symbolic(p) == p.answer;
        v.check(solved == 1000, std::string(to_string(config)) + ": " + std::to_string(solved) + " / 1000 recovered");
        generated[config] = std::move(data);
    }
    const double t = seconds_since(start);
    v.check(t < 120.0, "runtime " + fixed(t, 1) + " s < 120 s");
}

// ---------------------------------------------------------------- criterion 2

void gradient_verification(Verdict& v, std::uint64_t seed) {
    const auto start = Clock::now();
    double worst = 0.0;
    int failed = 0;
    long checked = 0;
    long skipped = 0;
    std::map<std::string, int> covered;
    for (int i = 0; i < 100; ++i) {
        Rng rng(Rng::mix(seed ^ (0x6a00 + static_cast<std::uint64_t>(i))));
        const int loss_kind = i % 3;  // multihot NLL, cross-entropy, MSE
        const auto config = kAllConfigurations[static_cast<std::size_t>(i % 7)];
        const int batch = rng.uniform_int(1, 4);

        int out = 0;
        if (loss_kind == 0) out = multihot_dim(config);
        else if (loss_kind == 1) out = rng.uniform_int(2, 6);
        else out = rng.uniform_int(1, 6);

        std::unique_ptr<nn::Network> net;
        Matrix x;
        std::string arch;
        if ((i / 3) % 4 == 3) {
            const int side = 8;
            const std::vector<int> channels{rng.uniform_int(1, 3), rng.uniform_int(1, 3)};
            const std::vector<int> head{rng.uniform_int(2, 6), out};
            net = std::make_unique<nn::ConvEncoder>(side, channels, head, rng);
            x.resize(side * side, batch);
            for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.uniform();
            arch = "conv";
        } else {
            std::vector<int> dims{rng.uniform_int(2, 12)};
            const int hidden_layers = rng.uniform_int(0, 2);
            for (int h = 0; h < hidden_layers; ++h) dims.push_back(rng.uniform_int(2, 10));
            dims.push_back(out);
            const auto act = rng.uniform_int(0, 1) ? nn::Activation::Relu : nn::Activation::Identity;
            net = std::make_unique<nn::Mlp>(dims, act, nn::Activation::Identity, rng);
            x.resize(dims.front(), batch);
            for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.uniform(-1.0, 1.0);
            arch = "mlp";
        }

        Matrix target;
        std::unique_ptr<nn::Loss> loss;
        if (loss_kind == 0) {
            target.resize(out, batch);
            for (int b = 0; b < batch; ++b) {
                const auto hot = encode(random_panel(config, rng), config);
                for (int r = 0; r < out; ++r) target(r, b) = hot[static_cast<std::size_t>(r)];
            }
            loss = std::make_unique<nn::MultihotNll>(multihot_layout(config));
        } else if (loss_kind == 1) {
            target.resize(1, batch);
            for (int b = 0; b < batch; ++b) target(0, b) = rng.uniform_int(0, out - 1);
            loss = std::make_unique<nn::CrossEntropy>();
        } else {
            target.resize(out, batch);
            for (Eigen::Index k = 0; k < target.size(); ++k) target.data()[k] = rng.uniform(-1.0, 1.0);
            loss = std::make_unique<nn::MeanSquared>();
        }
        // Random biases too, so no unit sits exactly on its ReLU kink.
        for (auto& p : net->parameters()) {
            if (p.decays) continue;
            for (auto& b : p.values) b = rng.uniform(-0.5, 0.5);
        }
        const auto r = nn::grad_check_report(*net, *loss, x, target);
        worst = std::max(worst, r.worst);
        if (!(r.worst < 1e-4) || r.checked == 0) ++failed;
        checked += r.checked;
        skipped += r.skipped;
        ++covered[arch + "/" + loss->name()];
    }
    std::string mix;
    for (const auto& [name, n] : covered) mix += " " + name + "=" + std::to_string(n);
    v.note("cases:" + mix);
    v.check(failed == 0, "100 cases, worst relative error " + std::to_string(worst) + " < 1e-4 (" +
                             std::to_string(failed) + " over)");
    const double skip_share = static_cast<double>(skipped) / static_cast<double>(checked + skipped);
    v.check(skip_share <= 0.01, std::to_string(checked) + " parameters compared, " + std::to_string(skipped) +
                                    " skipped where a +-epsilon probe crossed a ReLU kink (" + pct(skip_share) +
                                    " <= 1%)");
    const double t = seconds_since(start);
    v.check(t < 60.0, "runtime " + fixed(t, 1) + " s < 60 s");
}

// ---------------------------------------------------------------- criterion 6

void stub_equivalence(Verdict& v, const std::map<Configuration, Dataset>& generated) {
    for (auto config : kAllConfigurations) {
        const auto& problems = generated.at(config).problems;
        int agree = 0;
        for (std::size_t i = 0; i < 500; ++i) {
            OracleRowPredictor stub(problems[i]);
            agree += solve_with_predictor(stub, config).answer == oracle::solve_symbolic(problems[i]);
        }
        v.check(agree == 500, std::string(to_string(config)) + ": " + std::to_string(agree) + " / 500 agree");
    }
}

// ---------------------------------------------------------------- criterion 9

void round_trips(Verdict& v, std::uint64_t seed, const std::map<Configuration, Dataset>& generated) {
    for (auto config : kAllConfigurations) {
        Rng rng(Rng::mix(seed ^ 0x9900 ^ static_cast<std::uint64_t>(config)));
        int invalid = 0;
        int identical = 0;
        for (int i = 0; i < 10000; ++i) {
            const Panel p = random_panel(config, rng);
            if (!validate_panel(p, config).empty()) {
                ++invalid;
                continue;
            }
            identical += decode(encode(p, config), config) == p;
        }
        v.check(invalid == 0 && identical == 10000, std::string(to_string(config)) + ": encode/decode identity on " +
                                                        std::to_string(identical) + " / 10000 random panels");
    }
    // 1,000 problems drawn across all configurations.
    int same_problems = 0;
    int same_text = 0;
    int total = 0;
    for (auto config : kAllConfigurations) {
        Dataset slice = generated.at(config);
        slice.problems.resize(config == Configuration::Center ? 148 : 142);
        slice.header.count = static_cast<int>(slice.problems.size());
        const std::string text = serialize_dataset(slice);
        const Dataset back = parse_dataset(text);
        for (std::size_t i = 0; i < slice.problems.size(); ++i) {
            same_problems += i < back.problems.size() && back.problems[i] == slice.problems[i];
        }
        same_text += serialize_dataset(back) == text;
        total += slice.header.count;
    }
    v.check(total == 1000 && same_problems == 1000,
            "dataset parse(serialize(x)) = x on " + std::to_string(same_problems) + " / " + std::to_string(total) +
                " problems");
    v.check(same_text == 7, "serialize(parse(text)) = text for " + std::to_string(same_text) + " / 7 files");
}

// ------------------------------------------------------- criteria 3, 4, 5, 7

struct ConfigRun {
    double ae_seconds = 0.0;
    double rule_seconds = 0.0;
    double image_seconds = 0.0;
    ReconstructionMetrics reconstruction;
    std::vector<NetScore> nets;
    double mode_c = 0.0;
    std::optional<double> mode_a;
    std::optional<double> mode_b;
    nlohmann::json alignment;
};

ConfigRun train_and_evaluate(Configuration config, std::uint64_t seed, bool image, const fs::path& work) {
    ConfigRun run;
    RunConfig cfg;
    cfg.set("seed", std::to_string(seed));
    const auto train = generate_split(config, seed, "train", 0, cfg.get_int("train_count"));
    const auto val = generate_split(config, seed, "val", static_cast<std::uint64_t>(cfg.get_int("train_count")),
                                    cfg.get_int("val_count"));
    const auto test = generate_split(
        config, seed, "test", static_cast<std::uint64_t>(cfg.get_int("train_count") + cfg.get_int("val_count")),
        cfg.get_int("test_count"));
    const std::string name(to_string(config));

    ModelBundle bundle;
    bundle.config = config;
    bundle.seed = seed;

    auto t = Clock::now();
    train_autoencoder_stage(bundle, train.problems, val.problems, cfg);
    run.ae_seconds = seconds_since(t);
    run.reconstruction = reconstruction_accuracy(*bundle.autoencoder, collect_panels(test.problems));
    log(name + ": autoencoder " + fixed(run.ae_seconds, 0) + " s, held-out block accuracy " +
        pct(run.reconstruction.block_accuracy));

    t = Clock::now();
    train_rule_stage(bundle, train.problems, val.problems, cfg);
    run.rule_seconds = seconds_since(t);
    const SearchConfig scfg;
    const auto c_report = evaluate(test.problems, SolveMode::SymbolicNeural, bundle, scfg);
    run.nets = c_report.nets;
    run.mode_c = c_report.accuracy;
    log(name + ": rule nets " + fixed(run.rule_seconds, 0) + " s, mode c " + pct(run.mode_c));
    write_report(c_report, work / "reports" / (name + "_c"));

    if (image) {
        t = Clock::now();
        train_image_stage(bundle, train.problems, val.problems, cfg);
        run.image_seconds = seconds_since(t);
        run.alignment = bundle.image_metrics;
        const auto b_report = evaluate(test.problems, SolveMode::ImageSymbolic, bundle, scfg);
        const auto a_report = evaluate(test.problems, SolveMode::ImageNeural, bundle, scfg);
        run.mode_b = b_report.accuracy;
        run.mode_a = a_report.accuracy;
        write_report(b_report, work / "reports" / (name + "_b"));
        write_report(a_report, work / "reports" / (name + "_a"));
        log(name + ": image encoder " + fixed(run.image_seconds, 0) + " s, mode b " + pct(*run.mode_b) +
            ", mode a " + pct(*run.mode_a));
    }
    save_bundle(bundle, work / "models" / name);
    return run;
}

void reconstruction_criterion(Verdict& v, const std::map<Configuration, ConfigRun>& runs) {
    for (const auto& [config, run] : runs) {
        const double floor = is_grid(config) ? 0.98 : 0.995;
        v.check(run.reconstruction.block_accuracy >= floor,
                std::string(to_string(config)) + ": block accuracy " + pct(run.reconstruction.block_accuracy) +
                    " >= " + pct(floor) + " (" + std::to_string(run.reconstruction.panels) + " held-out panels)");
        v.check(run.ae_seconds < 900.0, std::string(to_string(config)) + ": training " + fixed(run.ae_seconds, 0) +
                                            " s < 900 s");
    }
}

void rule_net_criterion(Verdict& v, const std::map<Configuration, ConfigRun>& runs) {
    int total = 0;
    int good = 0;
    for (const auto& [config, run] : runs) {
        int here = 0;
        for (const auto& net : run.nets) {
            const double f1 = net.report.macro_f1;
            const bool ok = std::isfinite(f1) && f1 >= 0.90;
            here += ok;
            if (!ok) v.note(describe(net.key, config) + ": F1 " + fixed(f1, 3));
            if (config == Configuration::Center) {
                v.check(std::isfinite(f1) && f1 >= 0.93, "center " + describe(net.key, config) + ": F1 " +
                                                             fixed(f1, 3) + " >= 0.93");
            }
        }
        v.note(std::string(to_string(config)) + ": " + std::to_string(here) + " / " +
               std::to_string(run.nets.size()) + " nets at F1 >= 0.90");
        total += static_cast<int>(run.nets.size());
        good += here;
    }
    v.check(total == 135, "nets trained across configurations: " + std::to_string(total) + " (135 applicable)");
    const double share = total ? static_cast<double>(good) / total : 0.0;
    v.check(share >= 0.85, std::to_string(good) + " / " + std::to_string(total) + " nets (" + pct(share) +
                               ") at F1 >= 0.90, need >= 85%");
}

void mode_c_criterion(Verdict& v, const std::map<Configuration, ConfigRun>& runs) {
    const std::map<Configuration, double> floors{{Configuration::Center, 0.90},
                                                 {Configuration::LeftRight, 0.85},
                                                 {Configuration::UpDown, 0.85},
                                                 {Configuration::OutInCenter, 0.88}};
    for (const auto& [config, run] : runs) {
        const std::string line = std::string(to_string(config)) + ": mode c " + pct(run.mode_c);
        if (auto it = floors.find(config); it != floors.end()) {
            v.check(run.mode_c >= it->second, line + " >= " + pct(it->second) + " on 2000 held-out problems");
        } else {
            v.note(line + " (reported, not gated)");
        }
    }
}

void image_criterion(Verdict& v, const std::map<Configuration, ConfigRun>& runs) {
    for (const auto& [config, run] : runs) {
        if (!run.mode_b) continue;
        const std::string name(to_string(config));
        v.note(name + ": alignment " + run.alignment.dump());
        if (config == Configuration::Center) {
            v.check(*run.mode_b >= 0.85, "center: mode b " + pct(*run.mode_b) + " >= 85.00%");
            v.check(*run.mode_a >= 0.75, "center: mode a " + pct(*run.mode_a) + " >= 75.00%");
            const double total = run.ae_seconds + run.rule_seconds + run.image_seconds;
            v.check(total <= 3600.0, "center: training " + fixed(total, 0) + " s (ae " + fixed(run.ae_seconds, 0) +
                                         ", rules " + fixed(run.rule_seconds, 0) + ", image " +
                                         fixed(run.image_seconds, 0) + ") <= 3600 s");
        } else {
            v.note(name + ": mode b " + pct(*run.mode_b) + ", mode a " + pct(*run.mode_a) + " (reported, not gated)");
        }
    }
}

// ---------------------------------------------------------------- criterion 8

/// gen, train (all three stages) and eval of a small Center run into `dir`.
void deterministic_run(const fs::path& dir, std::uint64_t seed) {
    RunConfig cfg;
    cfg.set("seed", std::to_string(seed));
    cfg.set("ae_epochs", "30");
    cfg.set("rule_epochs", "5");
    cfg.set("rule_forced", "20");
    cfg.set("rule_option_problems", "40");
    cfg.set("img_panels", "150");
    cfg.set("img_epochs", "2");
    cfg.set("raster_size", "32");
    const auto config = Configuration::Center;
    const auto train = generate_split(config, seed, "train", 0, 200);
    const auto val = generate_split(config, seed, "val", 200, 60);
    const auto test = generate_split(config, seed, "test", 260, 60);
    write_dataset(dir / "data" / "train.jsonl", train);
    write_dataset(dir / "data" / "val.jsonl", val);
    write_dataset(dir / "data" / "test.jsonl", test);

    const auto train_back = read_dataset(dir / "data" / "train.jsonl");
    const auto val_back = read_dataset(dir / "data" / "val.jsonl");
    const auto test_back = read_dataset(dir / "data" / "test.jsonl");
    ModelBundle bundle;
    bundle.config = config;
    bundle.seed = seed;
    train_autoencoder_stage(bundle, train_back.problems, val_back.problems, cfg);
    train_rule_stage(bundle, train_back.problems, val_back.problems, cfg);
    train_image_stage(bundle, train_back.problems, val_back.problems, cfg);
    save_bundle(bundle, dir / "models");

    const auto loaded = load_bundle(dir / "models");
    for (auto mode : {SolveMode::ImageNeural, SolveMode::ImageSymbolic, SolveMode::SymbolicNeural}) {
        write_report(evaluate(test_back.problems, mode, loaded), dir / "reports" / std::string(to_string(mode)));
    }
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        out[fs::relative(entry.path(), root).generic_string()] = bytes.str();
    }
    return out;
}

void determinism(Verdict& v, std::uint64_t seed, const fs::path& work) {
    const fs::path first = work / "determinism" / "run1";
    const fs::path second = work / "determinism" / "run2";
    fs::remove_all(work / "determinism");
    deterministic_run(first, seed);
    deterministic_run(second, seed);
    const auto a = tree_contents(first);
    const auto b = tree_contents(second);
    std::map<std::string, int> by_kind;  // files compared per top-level directory
    int differing = 0;
    for (const auto& [path, bytes] : a) {
        const auto it = b.find(path);
        if (it == b.end() || it->second != bytes) {
            ++differing;
            v.note("differs: " + path);
        }
        ++by_kind[path.substr(0, path.find('/'))];
    }
    for (const auto& [path, bytes] : b) {
        if (!a.contains(path)) {
            ++differing;
            v.note("only in second run: " + path);
        }
    }
    for (const auto& [kind, n] : by_kind) v.note(kind + ": " + std::to_string(n) + " files");
    v.check(by_kind["data"] == 3 && by_kind["models"] > 10 && by_kind["reports"] == 15,
            "datasets, weight files and reports all produced");
    v.check(differing == 0, std::to_string(a.size()) + " files byte-identical across two runs (" +
                                std::to_string(differing) + " differ)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance run over all criteria"};
    std::uint64_t seed = 0;
    std::string work_dir;
    std::vector<int> only;
    bool all_image = false;
    app.add_option("--seed", seed, "master seed");
    app.add_option("--work", work_dir, "directory for datasets, models and reports (default: a temporary directory)");
    app.add_option("--only", only, "run only these criteria (1-9)")->check(CLI::Range(1, 9));
    app.add_flag("--all-image", all_image, "train image encoders for every configuration, not only Center");
    CLI11_PARSE(app, argc, argv);

    const fs::path work = work_dir.empty() ? fs::temp_directory_path() / ("lrpm-acceptance-" + std::to_string(seed))
                                           : fs::path(work_dir);
    fs::create_directories(work);
    auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    std::vector<Verdict> verdicts{{1, "oracle/generator soundness"},   {2, "gradient verification"},
                                  {3, "autoencoder reconstruction"},   {4, "rule-net quality"},
                                  {5, "end-to-end mode c"},            {6, "stub equivalence"},
                                  {7, "image modes on Center"},        {8, "determinism"},
                                  {9, "round-trip properties"}};
    auto run = [&](int id, const std::function<void(Verdict&)>& body) {
        auto& v = verdicts[static_cast<std::size_t>(id - 1)];
        std::cout << "criterion " << id << ": " << v.title << std::endl;
        try {
            body(v);
        } catch (const std::exception& e) {
            v.check(false, std::string("raised: ") + e.what());
        }
    };

    const auto start = Clock::now();
    std::map<Configuration, Dataset> generated;
    if (wanted(1) || wanted(6) || wanted(9)) {
        run(1, [&](Verdict& v) { oracle_soundness(v, seed, generated); });
        if (!wanted(1)) verdicts[0].ran = false;
    }
    if (wanted(2)) run(2, [&](Verdict& v) { gradient_verification(v, seed); });
    if (wanted(6)) run(6, [&](Verdict& v) { stub_equivalence(v, generated); });
    if (wanted(9)) run(9, [&](Verdict& v) { round_trips(v, seed, generated); });

    if (wanted(3) || wanted(4) || wanted(5) || wanted(7)) {
        std::map<Configuration, ConfigRun> runs;
        std::string failure;
        try {
            const bool rules_everywhere = wanted(3) || wanted(4) || wanted(5);
            for (auto config : kAllConfigurations) {
                if (!rules_everywhere && config != Configuration::Center) continue;
                const bool image = wanted(7) && (config == Configuration::Center || all_image);
                runs[config] = train_and_evaluate(config, seed, image, work);
            }
        } catch (const std::exception& e) {
            failure = e.what();
        }
        auto gate = [&](int id, void (*body)(Verdict&, const std::map<Configuration, ConfigRun>&)) {
            if (!wanted(id)) return;
            run(id, [&](Verdict& v) {
                if (!failure.empty()) v.check(false, "training raised: " + failure);
                body(v, runs);
            });
        };
        gate(3, reconstruction_criterion);
        gate(4, rule_net_criterion);
        gate(5, mode_c_criterion);
        gate(7, image_criterion);
    }
    if (wanted(8)) run(8, [&](Verdict& v) { determinism(v, seed, work); });

    std::cout << "\nsummary (seed " << seed << ", " << fixed(seconds_since(start) / 60.0, 1) << " min)\n";
    bool all_pass = true;
    for (const auto& v : verdicts) {
        if (!v.ran) continue;
        all_pass = all_pass && v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << v.id << ": " << v.title << "\n";
    }
    return all_pass ? 0 : 1;
}
