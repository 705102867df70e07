#include "lrpm/oracle.hpp"

#include <algorithm>
#include <cstdint>

#include "lrpm/errors.hpp"

namespace lrpm {

RowView problem_row(const Problem& problem, int row, int option) {
    return RowView{problem.config, problem.row(row, option)};
}

namespace oracle {

namespace {

constexpr std::array<int, 4> kProgressionSteps{-2, -1, 1, 2};

const ComponentState& state_of(const Panel& panel, int component) {
    return panel.components.at(static_cast<std::size_t>(component));
}

std::optional<int> uniform_value(const ComponentState& state, Attribute attr) {
    if (state.entities.empty()) return std::nullopt;
    const int first = entity_value(state.entities.begin()->second, attr);
    for (const auto& [slot, entity] : state.entities) {
        if (entity_value(entity, attr) != first) return std::nullopt;
    }
    return first;
}

std::uint32_t position_mask(const ComponentState& state) {
    std::uint32_t mask = 0;
    for (int slot : state.occupancy) mask |= 1u << slot;
    return mask;
}

std::optional<std::uint32_t> shift_mask(std::uint32_t mask, int step, int slots) {
    std::uint32_t out = 0;
    for (int s = 0; s < slots; ++s) {
        if ((mask >> s) & 1u) {
            const int t = s + step;
            if (t < 0 || t >= slots) return std::nullopt;
            out |= 1u << t;
        }
    }
    return out;
}

bool values_follow(RuleKind kind, int value, int a, int b, int c) {
    switch (kind) {
        case RuleKind::Constant: return a == b && b == c;
        case RuleKind::DistributeThree: return a != b && b != c && a != c;
        case RuleKind::Progression: return b - a == value && c - b == value;
        case RuleKind::Arithmetic:
            if (b < 1) return false;
            return value > 0 ? c == a + b : c == a - b;
    }
    return false;
}

bool check_entity_attribute(const RuleInstance& rule, const std::array<const ComponentState*, 3>& states) {
    if (rule.kind == RuleKind::Constant) {
        // Per slot: every panel occupying the slot carries the same value.
        for (std::size_t i = 0; i < 3; ++i) {
            for (const auto& [slot, entity] : states[i]->entities) {
                for (std::size_t j = i + 1; j < 3; ++j) {
                    auto it = states[j]->entities.find(slot);
                    if (it != states[j]->entities.end() &&
                        entity_value(it->second, rule.attribute) != entity_value(entity, rule.attribute)) {
                        return false;
                    }
                }
            }
        }
        return true;
    }
    std::array<int, 3> v{};
    for (std::size_t i = 0; i < 3; ++i) {
        auto u = uniform_value(*states[i], rule.attribute);
        if (!u) return false;
        v[i] = *u;
    }
    return values_follow(rule.kind, rule.value, v[0], v[1], v[2]);
}

bool check_position(const RuleInstance& rule, const std::array<const ComponentState*, 3>& states, int slots) {
    const std::uint32_t a = position_mask(*states[0]);
    const std::uint32_t b = position_mask(*states[1]);
    const std::uint32_t c = position_mask(*states[2]);
    switch (rule.kind) {
        case RuleKind::Constant: return a == b && b == c;
        case RuleKind::DistributeThree: return a != b && b != c && a != c;
        case RuleKind::Progression: {
            auto b_expected = shift_mask(a, rule.value, slots);
            auto c_expected = shift_mask(b, rule.value, slots);
            return b_expected && c_expected && *b_expected == b && *c_expected == c;
        }
        case RuleKind::Arithmetic:
            if (rule.value > 0) return (b & ~a) != 0 && c == (a | b);
            return (a & b) != 0 && c == (a & ~b) && c != 0;
    }
    return false;
}

}  // namespace

bool check_rule(const RuleInstance& rule, int component, const RowView& row) {
    if (!rule_applicability(row.config, component, rule.attribute, rule.kind)) {
        throw NotApplicable(describe(rule) + " does not exist for component " +
                            std::string(component_layout(row.config, component).name) + " of " +
                            std::string(to_string(row.config)));
    }
    if (!rule_value_legal(rule.kind, rule.value)) throw UsageError("illegal rule value in " + describe(rule));
    const std::array<const ComponentState*, 3> states{&state_of(*row.panels[0], component),
                                                      &state_of(*row.panels[1], component),
                                                      &state_of(*row.panels[2], component)};
    switch (rule.attribute) {
        case Attribute::Type:
        case Attribute::Size:
        case Attribute::Color: return check_entity_attribute(rule, states);
        case Attribute::Number:
            return values_follow(rule.kind, rule.value, static_cast<int>(states[0]->occupancy.size()),
                                 static_cast<int>(states[1]->occupancy.size()),
                                 static_cast<int>(states[2]->occupancy.size()));
        case Attribute::Position:
            return check_position(rule, states, component_layout(row.config, component).slots);
    }
    return false;
}

namespace {

// Candidate instances of a kind, in the order their classes are numbered.
std::vector<RuleInstance> instances_of(Attribute attr, RuleKind kind) {
    switch (kind) {
        case RuleKind::Constant: return {RuleInstance::constant(attr)};
        case RuleKind::DistributeThree: return {RuleInstance::distribute_three(attr)};
        case RuleKind::Progression: {
            std::vector<RuleInstance> out;
            for (int step : kProgressionSteps) out.push_back(RuleInstance::progression(attr, step));
            return out;
        }
        case RuleKind::Arithmetic:
            return {RuleInstance::arithmetic(attr, ArithmeticOp::Add), RuleInstance::arithmetic(attr, ArithmeticOp::Sub)};
    }
    return {};
}

}  // namespace

std::optional<RuleInstance> first_rule(int component, Attribute attr, const RowView& row) {
    for (RuleKind kind : kSearchOrder) {
        if (!rule_applicability(row.config, component, attr, kind)) continue;
        for (const auto& candidate : instances_of(attr, kind)) {
            if (check_rule(candidate, component, row)) return candidate;
        }
    }
    return std::nullopt;
}

std::vector<RowRules> infer_rules(const RowView& row) {
    std::vector<RowRules> out(static_cast<std::size_t>(component_count(row.config)));
    for (int c = 0; c < component_count(row.config); ++c) {
        for (Attribute attr : kAllAttributes) {
            if (!attribute_governable(row.config, c, attr)) continue;
            out[static_cast<std::size_t>(c)][attr] = first_rule(c, attr, row);
        }
    }
    return out;
}

std::vector<RuleAssignment> infer_shared_rules(const Problem& problem) {
    const RowView first = problem_row(problem, 0);
    const RowView second = problem_row(problem, 1);
    std::vector<RuleAssignment> out(static_cast<std::size_t>(component_count(problem.config)));
    for (int c = 0; c < component_count(problem.config); ++c) {
        for (Attribute attr : kAllAttributes) {
            for (RuleKind kind : kSearchOrder) {
                if (!rule_applicability(problem.config, c, attr, kind)) continue;
                const int label = label_row(first, c, attr, kind);
                if (label != 0 && label == label_row(second, c, attr, kind)) {
                    out[static_cast<std::size_t>(c)][attr] = rule_from_class(attr, kind, label);
                    break;
                }
            }
        }
    }
    return out;
}

int count_satisfied(const Problem& problem, const std::vector<RuleAssignment>& rules, int option) {
    const RowView third = problem_row(problem, 2, option);
    int satisfied = 0;
    for (std::size_t c = 0; c < rules.size(); ++c) {
        for (const auto& [attr, rule] : rules[c]) {
            if (check_rule(rule, static_cast<int>(c), third)) ++satisfied;
        }
    }
    return satisfied;
}

int solve_symbolic(const Problem& problem) {
    const auto rules = infer_shared_rules(problem);
    const bool any = std::any_of(rules.begin(), rules.end(), [](const RuleAssignment& r) { return !r.empty(); });
    if (!any) throw NoConsistentRules("rows 1 and 2 share no rule");
    int best = 0;
    int best_count = -1;
    for (int k = 0; k < kOptionCount; ++k) {
        const int count = count_satisfied(problem, rules, k);
        if (count > best_count) {
            best = k;
            best_count = count;
        }
    }
    return best;
}

int class_count(RuleKind kind) {
    switch (kind) {
        case RuleKind::Constant:
        case RuleKind::DistributeThree: return 2;
        case RuleKind::Progression: return 5;
        case RuleKind::Arithmetic: return 3;
    }
    return 0;
}

int rule_class(const RuleInstance& rule) {
    switch (rule.kind) {
        case RuleKind::Constant:
        case RuleKind::DistributeThree: return 1;
        case RuleKind::Progression: {
            auto it = std::find(kProgressionSteps.begin(), kProgressionSteps.end(), rule.value);
            if (it == kProgressionSteps.end()) throw UsageError("illegal progression step");
            return 1 + static_cast<int>(it - kProgressionSteps.begin());
        }
        case RuleKind::Arithmetic: return rule.value > 0 ? 1 : 2;
    }
    return 0;
}

RuleInstance rule_from_class(Attribute attr, RuleKind kind, int cls) {
    if (cls <= 0 || cls >= class_count(kind)) throw UsageError("class index does not name a rule value");
    switch (kind) {
        case RuleKind::Constant: return RuleInstance::constant(attr);
        case RuleKind::DistributeThree: return RuleInstance::distribute_three(attr);
        case RuleKind::Progression:
            return RuleInstance::progression(attr, kProgressionSteps[static_cast<std::size_t>(cls - 1)]);
        case RuleKind::Arithmetic: return RuleInstance::arithmetic(attr, cls == 1 ? ArithmeticOp::Add : ArithmeticOp::Sub);
    }
    return {};
}

int label_row(const RowView& row, int component, Attribute attr, RuleKind kind) {
    if (!rule_applicability(row.config, component, attr, kind)) {
        throw NotApplicable("(" + std::string(to_string(attr)) + ", " + std::string(to_string(kind)) +
                            ") has no rule net for component " +
                            std::string(component_layout(row.config, component).name));
    }
    for (const auto& candidate : instances_of(attr, kind)) {
        if (check_rule(candidate, component, row)) return rule_class(candidate);
    }
    return 0;
}

}  // namespace oracle
}  // namespace lrpm
