#include "lrpm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "lrpm/encoding.hpp"
#include "lrpm/errors.hpp"
#include "lrpm/files.hpp"
#include "lrpm/io.hpp"

namespace lrpm {

namespace {

constexpr std::size_t kChunk = 64;

int argmax(const Vector& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = i;
    }
    return best;
}

bool binary_kind(RuleKind kind) { return kind == RuleKind::Constant || kind == RuleKind::DistributeThree; }

std::vector<Panel> panels_of(std::span<const Problem> problems) {
    std::vector<Panel> out;
    out.reserve(problems.size() * 16);
    for (const auto& p : problems) {
        out.insert(out.end(), p.context.begin(), p.context.end());
        out.insert(out.end(), p.options.begin(), p.options.end());
    }
    return out;
}

void require_models(SolveMode mode, const ModelBundle& models, Configuration config) {
    if (models.config != config) {
        throw UsageError("models were trained for " + std::string(to_string(models.config)) + ", problems are " +
                         std::string(to_string(config)));
    }
    if (!models.autoencoder) throw MissingPrerequisite("mode " + std::string(to_string(mode)) + " needs an autoencoder");
    if (mode != SolveMode::SymbolicNeural && !models.image_encoder) {
        throw MissingPrerequisite("mode " + std::string(to_string(mode)) + " needs an image encoder");
    }
    if (mode != SolveMode::ImageSymbolic && models.rule_nets.empty()) {
        throw MissingPrerequisite("mode " + std::string(to_string(mode)) + " needs rule nets");
    }
}

Panel decode_column(const Matrix& scores, Eigen::Index col, Configuration config) {
    return decode(std::span<const double>(scores.col(col).data(), static_cast<std::size_t>(scores.rows())), config);
}

// Latents (modes A and C) or decoded problems (mode B) of one chunk.
struct ChunkInput {
    Matrix latents;
    std::vector<Problem> decoded;
};

ChunkInput prepare_chunk(std::span<const Problem> chunk, SolveMode mode, const ModelBundle& models) {
    ChunkInput in;
    const auto panels = panels_of(chunk);
    const auto config = models.config;
    switch (mode) {
        case SolveMode::SymbolicNeural: in.latents = models.autoencoder->encode_panels(panels); break;
        case SolveMode::ImageNeural: in.latents = models.image_encoder->encode_panels(panels, config); break;
        case SolveMode::ImageSymbolic: {
            const Matrix scores = models.autoencoder->decode_scores(models.image_encoder->encode_panels(panels, config));
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                Problem d;
                d.config = config;
                const auto base = static_cast<Eigen::Index>(i * 16);
                for (int k = 0; k < kContextPanels; ++k) d.context[static_cast<std::size_t>(k)] = decode_column(scores, base + k, config);
                for (int k = 0; k < kOptionCount; ++k) {
                    d.options[static_cast<std::size_t>(k)] = decode_column(scores, base + kContextPanels + k, config);
                }
                in.decoded.push_back(std::move(d));
            }
            break;
        }
    }
    return in;
}

SolveOutcome solve_symbolic_outcome(const Problem& decoded) {
    SolveOutcome out;
    out.rules = oracle_inferred_rules(decoded);
    try {
        out.answer = oracle::solve_symbolic(decoded);
        for (int k = 0; k < kOptionCount; ++k) {
            out.scores[static_cast<std::size_t>(k)] = oracle::count_satisfied(decoded, oracle::infer_shared_rules(decoded), k);
        }
    } catch (const NoConsistentRules&) {
        out.answer = 0;
        out.no_consistent_rules = true;
    }
    return out;
}

SolveOutcome solve_in_chunk(const ChunkInput& in, std::size_t i, SolveMode mode, const ModelBundle& models,
                            const SearchConfig& scfg) {
    if (mode == SolveMode::ImageSymbolic) return solve_symbolic_outcome(in.decoded[i]);
    const NeuralRowPredictor predictor(models.rule_nets, in.latents.middleCols(static_cast<Eigen::Index>(i * 16), 16));
    return solve_with_predictor(predictor, models.config, scfg);
}

std::string percent(double fraction) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * fraction;
    return s.str();
}

std::string fixed2(double value) {
    if (std::isnan(value)) return "n/a";
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << value;
    return s.str();
}

std::string pad(std::string text, std::size_t width) {
    if (text.size() < width) text.append(width - text.size(), ' ');
    return text;
}

// Column order of the F1 grid.
constexpr std::array<RuleKind, 4> kGridKinds{RuleKind::Constant, RuleKind::Progression, RuleKind::Arithmetic,
                                             RuleKind::DistributeThree};

std::string kind_title(RuleKind kind) {
    switch (kind) {
        case RuleKind::Constant: return "Constant";
        case RuleKind::Progression: return "Progression";
        case RuleKind::Arithmetic: return "Arithmetic";
        case RuleKind::DistributeThree: return "Distribute Three";
    }
    return "?";
}

std::string attribute_title(Attribute attr) {
    std::string s(to_string(attr));
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

}  // namespace

std::string_view to_string(SolveMode mode) {
    switch (mode) {
        case SolveMode::ImageNeural: return "a";
        case SolveMode::ImageSymbolic: return "b";
        case SolveMode::SymbolicNeural: return "c";
    }
    return "?";
}

std::string_view mode_label(SolveMode mode) {
    switch (mode) {
        case SolveMode::ImageNeural: return "A: Image/Neural";
        case SolveMode::ImageSymbolic: return "B: Image/Symbolic";
        case SolveMode::SymbolicNeural: return "c: Symbolic/Neural";
    }
    return "?";
}

std::optional<SolveMode> parse_solve_mode(std::string_view text) {
    if (text == "a" || text == "A") return SolveMode::ImageNeural;
    if (text == "b" || text == "B") return SolveMode::ImageSymbolic;
    if (text == "c" || text == "C") return SolveMode::SymbolicNeural;
    return std::nullopt;
}

void SearchConfig::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw UsageError("tau must lie strictly between 0 and 1");
    auto sorted = rule_order;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw UsageError("rule order must list each rule kind once");
    }
}

std::string describe(const InferredRule& rule, Configuration config) {
    return std::string(component_layout(config, rule.component).name) + ": " +
           describe(oracle::rule_from_class(rule.attribute, rule.kind, rule.value));
}

bool OracleRowPredictor::covers(const RuleKey& key) const {
    return rule_applicability(problem_.config, key.component, key.attribute, key.kind);
}

Vector OracleRowPredictor::probabilities(const RuleKey& key, int row, int option) const {
    Vector p = Vector::Zero(oracle::class_count(key.kind));
    p(oracle::label_row(problem_row(problem_, row, row == 2 ? option : -1), key.component, key.attribute, key.kind)) = 1.0;
    return p;
}

NeuralRowPredictor::NeuralRowPredictor(const std::map<RuleKey, RuleNet>& nets, Matrix latents)
    : nets_(nets), latents_(std::move(latents)) {
    if (latents_.cols() != 16) throw DimensionMismatch("a problem has 16 panel latents");
}

bool NeuralRowPredictor::covers(const RuleKey& key) const { return nets_.contains(key); }

const Matrix& NeuralRowPredictor::table(const RuleKey& key) const {
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    const auto net = nets_.find(key);
    if (net == nets_.end()) throw MissingNet("no rule net for this key");
    Matrix rows(3 * latents_.rows(), 2 + kOptionCount);
    rows.col(0) = row_features(latents_, 0, -1);
    rows.col(1) = row_features(latents_, 1, -1);
    for (int k = 0; k < kOptionCount; ++k) rows.col(2 + k) = row_features(latents_, 2, k);
    if (rows.rows() != net->second.classifier.input_dim()) throw DimensionMismatch("latents do not match the rule net");
    return cache_.emplace(key, net->second.probabilities(rows)).first->second;
}

Vector NeuralRowPredictor::probabilities(const RuleKey& key, int row, int option) const {
    const Matrix& t = table(key);
    if (row < 0 || row > 2) throw UsageError("row index out of range");
    if (row < 2) return t.col(row);
    if (option < 0 || option >= kOptionCount) throw UsageError("option index out of range");
    return t.col(2 + option);
}

std::vector<InferredRule> infer_rules_neural(const RowPredictor& predictor, Configuration config,
                                             const SearchConfig& scfg) {
    scfg.validate();
    std::vector<InferredRule> out;
    for (int c = 0; c < component_count(config); ++c) {
        for (auto attr : kAllAttributes) {
            for (auto kind : scfg.rule_order) {
                if (!rule_applicability(config, c, attr, kind)) continue;
                const RuleKey key{c, attr, kind};
                if (!predictor.covers(key)) {
                    throw MissingNet("no rule net for " + describe(key, config));
                }
                const Vector p1 = predictor.probabilities(key, 0, -1);
                const Vector p2 = predictor.probabilities(key, 1, -1);
                int value = 0;
                if (binary_kind(kind)) {
                    if (p1(1) > scfg.tau && p2(1) > scfg.tau) value = 1;
                } else {
                    const int a1 = argmax(p1);
                    if (a1 != 0 && a1 == argmax(p2)) value = a1;
                }
                if (value != 0) {
                    out.push_back({c, attr, kind, value});
                    break;
                }
            }
        }
    }
    return out;
}

std::array<double, kOptionCount> score_options(const RowPredictor& predictor, std::span<const InferredRule> rules) {
    if (rules.empty()) throw EmptyRuleSet("no rule was inferred from rows 1 and 2");
    std::array<double, kOptionCount> scores{};
    for (const auto& r : rules) {
        const RuleKey key{r.component, r.attribute, r.kind};
        for (int k = 0; k < kOptionCount; ++k) scores[static_cast<std::size_t>(k)] += predictor.probabilities(key, 2, k)(r.value);
    }
    return scores;
}

int pick_answer(const std::array<double, kOptionCount>& scores) {
    int best = 0;
    for (int k = 1; k < kOptionCount; ++k) {
        if (scores[static_cast<std::size_t>(k)] > scores[static_cast<std::size_t>(best)]) best = k;
    }
    return best;
}

SolveOutcome solve_with_predictor(const RowPredictor& predictor, Configuration config, const SearchConfig& scfg) {
    SolveOutcome out;
    out.rules = infer_rules_neural(predictor, config, scfg);
    if (out.rules.empty()) {
        out.empty_rule_set = true;
        return out;
    }
    out.scores = score_options(predictor, out.rules);
    out.answer = pick_answer(out.scores);
    return out;
}

std::vector<InferredRule> oracle_inferred_rules(const Problem& problem) {
    std::vector<InferredRule> out;
    const auto shared = oracle::infer_shared_rules(problem);
    for (std::size_t c = 0; c < shared.size(); ++c) {
        for (const auto& [attr, rule] : shared[c]) {
            out.push_back({static_cast<int>(c), attr, rule.kind, oracle::rule_class(rule)});
        }
    }
    return out;
}

Problem decode_problem(const Problem& problem, const SymbolicAutoencoder& ae, const ImageEncoder& image) {
    ModelBundle view;
    view.config = problem.config;
    // The bundle only borrows copies here; decoding is rare enough outside evaluate().
    view.autoencoder = ae;
    view.image_encoder = image;
    return prepare_chunk(std::span<const Problem>(&problem, 1), SolveMode::ImageSymbolic, view).decoded.front();
}

std::vector<SolveOutcome> solve_all(std::span<const Problem> problems, SolveMode mode, const ModelBundle& models,
                                    const SearchConfig& scfg) {
    scfg.validate();
    std::vector<SolveOutcome> out;
    if (problems.empty()) return out;
    require_models(mode, models, problems.front().config);
    for (std::size_t start = 0; start < problems.size(); start += kChunk) {
        const auto chunk = problems.subspan(start, std::min(kChunk, problems.size() - start));
        for (const auto& p : chunk) {
            if (p.config != models.config) throw UsageError("problems mix configurations");
        }
        const auto in = prepare_chunk(chunk, mode, models);
        for (std::size_t i = 0; i < chunk.size(); ++i) out.push_back(solve_in_chunk(in, i, mode, models, scfg));
    }
    return out;
}

SolveOutcome solve(const Problem& problem, SolveMode mode, const ModelBundle& models, const SearchConfig& scfg) {
    return solve_all(std::span<const Problem>(&problem, 1), mode, models, scfg).front();
}

bool degenerate_options(const Problem& problem) {
    return std::all_of(problem.options.begin() + 1, problem.options.end(),
                       [&](const Panel& p) { return p == problem.options.front(); });
}

EvaluationReport evaluate(std::span<const Problem> problems, SolveMode mode, const ModelBundle& models,
                          const SearchConfig& scfg) {
    scfg.validate();
    EvaluationReport r;
    r.config = models.config;
    r.mode = mode;
    r.problems = static_cast<int>(problems.size());
    if (!problems.empty()) require_models(mode, models, problems.front().config);
    r.latent_source = mode == SolveMode::ImageNeural ? "E_X" : "E_S";

    std::map<RuleKey, std::pair<std::vector<int>, std::vector<int>>> net_labels;  // truth, predicted
    for (std::size_t start = 0; start < problems.size(); start += kChunk) {
        const auto chunk = problems.subspan(start, std::min(kChunk, problems.size() - start));
        for (const auto& p : chunk) {
            if (p.config != models.config) throw UsageError("problems mix configurations");
        }
        const auto in = prepare_chunk(chunk, mode, models);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const int index = static_cast<int>(start + i);
            const auto& problem = chunk[i];
            const auto outcome = solve_in_chunk(in, i, mode, models, scfg);
            r.answers.push_back(outcome.answer);
            if (outcome.empty_rule_set) r.empty_rule_set.push_back(index);
            if (outcome.no_consistent_rules) r.no_consistent_rules.push_back(index);
            if (degenerate_options(problem)) {
                r.degenerate.push_back(index);
            } else {
                ++r.scored;
                r.correct += outcome.answer == problem.answer ? 1 : 0;
            }

            // Inference confusion against the oracle on pristine input.
            const auto truth = oracle_inferred_rules(problem);
            for (int c = 0; c < component_count(r.config); ++c) {
                for (auto attr : kAllAttributes) {
                    if (!attribute_governable(r.config, c, attr)) continue;
                    auto find = [&](const std::vector<InferredRule>& rules) -> const InferredRule* {
                        for (const auto& x : rules) {
                            if (x.component == c && x.attribute == attr) return &x;
                        }
                        return nullptr;
                    };
                    const auto* t = find(truth);
                    const auto* g = find(outcome.rules);
                    auto& counts = r.inference[{c, attr}];
                    if (t && g) {
                        (*t == *g ? counts.matched : counts.mismatched)++;
                    } else if (t) {
                        ++counts.missed;
                    } else if (g) {
                        ++counts.spurious;
                    }
                }
            }
        }

        // Per-net labels on rows 1-2.
        if (models.rule_nets.empty()) continue;
        const Matrix latents = mode == SolveMode::ImageNeural
                                   ? in.latents
                                   : (mode == SolveMode::SymbolicNeural ? in.latents
                                                                        : models.autoencoder->encode_panels(panels_of(chunk)));
        for (const auto& [key, net] : models.rule_nets) {
            Matrix rows(net.classifier.input_dim(), static_cast<Eigen::Index>(2 * chunk.size()));
            auto& [truth, predicted] = net_labels[key];
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                const Matrix lat = latents.middleCols(static_cast<Eigen::Index>(i * 16), 16);
                for (int row = 0; row < 2; ++row) {
                    rows.col(static_cast<Eigen::Index>(2 * i + row)) = row_features(lat, row, -1);
                    truth.push_back(oracle::label_row(problem_row(chunk[i], row), key.component, key.attribute, key.kind));
                }
            }
            const auto p = predict_classes(net, rows);
            predicted.insert(predicted.end(), p.begin(), p.end());
        }
    }
    r.accuracy = r.scored > 0 ? static_cast<double>(r.correct) / r.scored : std::nan("");
    for (const auto& [key, labels] : net_labels) {
        r.nets.push_back({key, classification_report(labels.first, labels.second, models.find(key)->class_count)});
    }
    return r;
}

std::string format_report(const EvaluationReport& r) {
    std::ostringstream s;
    const std::string config_name(short_name(r.config));
    s << "Configuration wise accuracy (%)\n";
    s << pad("Mode", 22) << config_name << "\n";
    s << pad(std::string(mode_label(r.mode)), 22) << (r.scored > 0 ? percent(r.accuracy) : "n/a") << "\n";
    s << "problems " << r.problems << ", scored " << r.scored << ", correct " << r.correct << "\n";

    if (!r.nets.empty()) {
        s << "\nF1-score of rule classification networks (" << config_name << ", latents from " << r.latent_source
          << ", rows 1-2)\n";
        for (int c = 0; c < component_count(r.config); ++c) {
            s << "[" << component_layout(r.config, c).name << "]\n";
            s << pad("", 10);
            for (auto kind : kGridKinds) s << pad(kind_title(kind), 18);
            s << "\n";
            for (auto attr : kAllAttributes) {
                if (!attribute_governable(r.config, c, attr)) continue;
                s << pad(attribute_title(attr), 10);
                for (auto kind : kGridKinds) {
                    std::string cell;
                    for (const auto& n : r.nets) {
                        if (n.key == RuleKey{c, attr, kind}) cell = fixed2(n.report.macro_f1);
                    }
                    s << pad(cell, 18);
                }
                s << "\n";
            }
        }
        const auto good = std::count_if(r.nets.begin(), r.nets.end(), [](const NetScore& n) { return n.report.macro_f1 >= 0.9; });
        s << good << " of " << r.nets.size() << " nets have F1 >= 0.90\n";
    }

    s << "\nRule inference against the oracle (matched / mismatched / missed / spurious)\n";
    for (const auto& [where, counts] : r.inference) {
        s << pad(std::string(component_layout(r.config, where.first).name) + "/" + std::string(to_string(where.second)), 22)
          << counts.matched << " / " << counts.mismatched << " / " << counts.missed << " / " << counts.spurious << "\n";
    }
    auto list = [&](const char* title, const std::vector<int>& ids) {
        s << title << ": " << ids.size();
        if (!ids.empty()) {
            s << " (";
            for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s << (i ? " " : "") << ids[i];
            if (ids.size() > 20) s << " ...";
            s << ")";
        }
        s << "\n";
    };
    s << "\nFlags\n";
    list("degenerate input (identical options)", r.degenerate);
    list("empty inferred rule set (answered 0)", r.empty_rule_set);
    list("no consistent decoded rules (answered 0)", r.no_consistent_rules);
    return s.str();
}

std::string accuracy_csv(const EvaluationReport& r, bool header) {
    std::string out;
    if (header) {
        out += csv_row({"configuration", "mode", "problems", "scored", "correct", "accuracy", "degenerate",
                        "empty_rule_set", "no_consistent_rules"});
    }
    out += csv_row({std::string(to_string(r.config)), std::string(to_string(r.mode)), std::to_string(r.problems),
                    std::to_string(r.scored), std::to_string(r.correct), r.scored > 0 ? format_number(r.accuracy) : "",
                    std::to_string(r.degenerate.size()), std::to_string(r.empty_rule_set.size()),
                    std::to_string(r.no_consistent_rules.size())});
    return out;
}

std::string f1_csv(const EvaluationReport& r, bool header) {
    std::string out;
    if (header) {
        out += csv_row({"configuration", "mode", "component", "attribute", "kind", "classes", "support", "macro_f1",
                        "accuracy", "latents"});
    }
    for (const auto& n : r.nets) {
        out += csv_row({std::string(to_string(r.config)), std::string(to_string(r.mode)),
                        std::string(component_layout(r.config, n.key.component).name),
                        std::string(to_string(n.key.attribute)), std::string(to_string(n.key.kind)),
                        std::to_string(n.report.class_count), std::to_string(n.report.support),
                        format_number(n.report.macro_f1), format_number(n.report.accuracy), r.latent_source});
    }
    return out;
}

std::string inference_csv(const EvaluationReport& r, bool header) {
    std::string out;
    if (header) {
        out += csv_row({"configuration", "mode", "component", "attribute", "matched", "mismatched", "missed", "spurious"});
    }
    for (const auto& [where, c] : r.inference) {
        out += csv_row({std::string(to_string(r.config)), std::string(to_string(r.mode)),
                        std::string(component_layout(r.config, where.first).name), std::string(to_string(where.second)),
                        std::to_string(c.matched), std::to_string(c.mismatched), std::to_string(c.missed),
                        std::to_string(c.spurious)});
    }
    return out;
}

std::string flags_csv(const EvaluationReport& r) {
    std::string out = csv_row({"index", "flag", "answer"});
    std::vector<std::pair<int, std::string>> rows;
    for (int i : r.degenerate) rows.emplace_back(i, "degenerate_input");
    for (int i : r.empty_rule_set) rows.emplace_back(i, "empty_rule_set");
    for (int i : r.no_consistent_rules) rows.emplace_back(i, "no_consistent_rules");
    std::sort(rows.begin(), rows.end());
    for (const auto& [i, flag] : rows) {
        out += csv_row({std::to_string(i), flag, std::to_string(r.answers[static_cast<std::size_t>(i)])});
    }
    return out;
}

void write_report(const EvaluationReport& r, const std::filesystem::path& dir) {
    write_file_atomic(dir / "report.txt", format_report(r));
    write_file_atomic(dir / "accuracy.csv", accuracy_csv(r));
    write_file_atomic(dir / "f1.csv", f1_csv(r));
    write_file_atomic(dir / "inference.csv", inference_csv(r));
    write_file_atomic(dir / "flags.csv", flags_csv(r));
}

}  // namespace lrpm
