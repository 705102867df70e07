#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrpm/bundle.hpp"
#include "lrpm/oracle.hpp"

namespace lrpm {

/// A: image input, neural search. B: image input decoded to symbols, oracle search.
/// C: symbolic input, neural search.
enum class SolveMode { ImageNeural, ImageSymbolic, SymbolicNeural };

std::string_view to_string(SolveMode mode);  // "a", "b", "c"
std::string_view mode_label(SolveMode mode);  // "A: Image/Neural", ...
std::optional<SolveMode> parse_solve_mode(std::string_view text);

struct SearchConfig {
    double tau = 0.5;
    std::array<RuleKind, 4> rule_order = kSearchOrder;

    void validate() const;
};

/// A rule accepted by the search; `value` is the rule net class (never 0).
struct InferredRule {
    int component = 0;
    Attribute attribute = Attribute::Type;
    RuleKind kind = RuleKind::Constant;
    int value = 1;

    bool operator==(const InferredRule&) const = default;
};

std::string describe(const InferredRule& rule, Configuration config);

/// Class probabilities of one rule net on the rows of a single problem.
/// Row 0 and 1 ignore `option`; row 2 is completed by option `option`.
class RowPredictor {
public:
    virtual ~RowPredictor() = default;
    virtual bool covers(const RuleKey& key) const = 0;
    virtual Vector probabilities(const RuleKey& key, int row, int option) const = 0;
};

/// Exact one-hot probabilities from oracle::label_row.
class OracleRowPredictor : public RowPredictor {
public:
    explicit OracleRowPredictor(const Problem& problem) : problem_(problem) {}
    bool covers(const RuleKey& key) const override;
    Vector probabilities(const RuleKey& key, int row, int option) const override;

private:
    const Problem& problem_;
};

/// Rule nets applied to the 16 panel latents of one problem (columns 0-7 context, 8-15 options).
class NeuralRowPredictor : public RowPredictor {
public:
    NeuralRowPredictor(const std::map<RuleKey, RuleNet>& nets, Matrix latents);
    bool covers(const RuleKey& key) const override;
    Vector probabilities(const RuleKey& key, int row, int option) const override;

private:
    const Matrix& table(const RuleKey& key) const;

    const std::map<RuleKey, RuleNet>& nets_;
    Matrix latents_;
    mutable std::map<RuleKey, Matrix> cache_;  // classes x 10: rows 1-2, then row 3 per option
};

/// Per component and attribute, the first kind in `rule_order` whose net accepts rows 1 and 2.
/// Throws MissingNet when an applicable net is absent.
std::vector<InferredRule> infer_rules_neural(const RowPredictor& predictor, Configuration config,
                                             const SearchConfig& scfg = {});

/// Sum over rules of the third-row probability of the inferred class, per option.
/// Throws EmptyRuleSet when `rules` is empty.
std::array<double, kOptionCount> score_options(const RowPredictor& predictor, std::span<const InferredRule> rules);

/// Highest score, lowest index on ties.
int pick_answer(const std::array<double, kOptionCount>& scores);

struct SolveOutcome {
    int answer = 0;
    std::vector<InferredRule> rules;
    std::array<double, kOptionCount> scores{};
    bool empty_rule_set = false;       // neural search found no rule; answer defaults to 0
    bool no_consistent_rules = false;  // mode B: decoded rows share no rule; answer defaults to 0
};

/// Neural search and scoring through `predictor`.
SolveOutcome solve_with_predictor(const RowPredictor& predictor, Configuration config, const SearchConfig& scfg = {});

/// The oracle's shared rules expressed as rule net classes.
std::vector<InferredRule> oracle_inferred_rules(const Problem& problem);

/// Decodes every panel through D_S(E_X(render(panel))).
Problem decode_problem(const Problem& problem, const SymbolicAutoencoder& ae, const ImageEncoder& image);

SolveOutcome solve(const Problem& problem, SolveMode mode, const ModelBundle& models, const SearchConfig& scfg = {});
std::vector<SolveOutcome> solve_all(std::span<const Problem> problems, SolveMode mode, const ModelBundle& models,
                                    const SearchConfig& scfg = {});

/// Whether all eight options are the same panel.
bool degenerate_options(const Problem& problem);

struct InferenceCounts {
    long matched = 0;     // same kind and value as the oracle
    long mismatched = 0;  // a rule on the attribute, but a different kind or value
    long missed = 0;      // oracle rule with nothing inferred
    long spurious = 0;    // inferred rule where the oracle has none
};

struct NetScore {
    RuleKey key;
    ClassificationReport report;
};

struct EvaluationReport {
    Configuration config = Configuration::Center;
    SolveMode mode = SolveMode::SymbolicNeural;
    int problems = 0;
    int scored = 0;  // problems minus degenerate ones
    int correct = 0;
    double accuracy = 0.0;
    std::vector<int> answers;
    std::vector<int> degenerate;
    std::vector<int> empty_rule_set;
    std::vector<int> no_consistent_rules;
    std::map<std::pair<int, Attribute>, InferenceCounts> inference;
    std::vector<NetScore> nets;  // held-out rows 1-2 of the evaluated problems
    std::string latent_source;   // "E_S" or "E_X"
};

EvaluationReport evaluate(std::span<const Problem> problems, SolveMode mode, const ModelBundle& models,
                          const SearchConfig& scfg = {});

/// Table-shaped text: accuracy row, per-net F1 grid, inference counts, flags.
std::string format_report(const EvaluationReport& report);
std::string accuracy_csv(const EvaluationReport& report, bool header = true);
std::string f1_csv(const EvaluationReport& report, bool header = true);
std::string inference_csv(const EvaluationReport& report, bool header = true);
std::string flags_csv(const EvaluationReport& report);

/// Writes report.txt, accuracy.csv, f1.csv, inference.csv and flags.csv into `dir`.
void write_report(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace lrpm
