#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "lrpm/core.hpp"
#include "lrpm/rng.hpp"

namespace lrpm {

struct GeneratorConfig {
    Configuration config = Configuration::Center;
    std::uint64_t seed = 0;
    int min_edits = 1;  // attribute edits per distractor
    int max_edits = 2;
    int max_rejections = 1000;

    void validate() const;
};

/// Pins one (component, attribute) to a rule kind when sampling an assignment.
struct ForcedRule {
    int component = 0;
    Attribute attribute = Attribute::Type;
    RuleKind kind = RuleKind::Constant;
};

/// Per-problem values shared by all rows: the triples permuted by DistributeThree.
struct ProblemPlan {
    Configuration config = Configuration::Center;
    std::vector<RuleAssignment> rules;
    // (component, attribute) -> three distinct values; Position triples are slot bitmasks.
    std::map<std::pair<int, Attribute>, std::array<std::uint32_t, 3>> triples;
};

/// One rule per governable entity attribute of each component; grid components
/// additionally get exactly one rule on either Number or Position.
std::vector<RuleAssignment> sample_rule_assignment(Configuration config, Rng& rng,
                                                   const std::optional<ForcedRule>& forced = std::nullopt);

ProblemPlan plan_problem(const std::vector<RuleAssignment>& rules, Configuration config, Rng& rng);

/// Three panels of row `row_index` satisfying every rule of the plan.
/// Throws GenerationExhausted when a rule has no in-bounds instantiation.
std::array<Panel, kRowLength> apply_rules_to_row(const ProblemPlan& plan, int row_index, Rng& rng,
                                                 int max_rejections = 1000);
std::array<Panel, kRowLength> apply_rules_to_row(const std::vector<RuleAssignment>& rules, Configuration config,
                                                 Rng& rng);

/// Full problem: three rows under one assignment, the correct completion at a
/// uniformly drawn option index and seven distractors that each break at least
/// one of the assignment's rules. Rows whose shared inferred rules differ from
/// the assignment are resampled, so the symbolic solver always recovers `answer`.
Problem generate_problem(const GeneratorConfig& gcfg, Rng& rng, const std::optional<ForcedRule>& forced = std::nullopt);

/// Same, with a caller-chosen rule assignment.
Problem generate_problem_with(const std::vector<RuleAssignment>& rules, const GeneratorConfig& gcfg, Rng& rng);

/// Problem `index` of the stream defined by `gcfg.seed`; independent of other indices.
Problem generate_indexed(const GeneratorConfig& gcfg, std::uint64_t index,
                         const std::optional<ForcedRule>& forced = std::nullopt);

std::vector<Problem> generate_dataset(const GeneratorConfig& gcfg, int count);

}  // namespace lrpm
