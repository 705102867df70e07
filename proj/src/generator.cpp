#include "lrpm/generator.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "lrpm/errors.hpp"
#include "lrpm/oracle.hpp"

namespace lrpm {

namespace {

constexpr std::array<Attribute, 3> kEntityAttributes{Attribute::Type, Attribute::Size, Attribute::Color};
constexpr std::array<int, 4> kSteps{-2, -1, 1, 2};

// Attempts spent on one rule assignment before a fresh one is drawn.
constexpr int kAttemptsPerAssignment = 25;

RuleInstance random_instance(Attribute attr, RuleKind kind, Rng& rng) {
    switch (kind) {
        case RuleKind::Constant: return RuleInstance::constant(attr);
        case RuleKind::DistributeThree: return RuleInstance::distribute_three(attr);
        case RuleKind::Progression: return RuleInstance::progression(attr, kSteps[rng.index(kSteps.size())]);
        case RuleKind::Arithmetic:
            return RuleInstance::arithmetic(attr, rng.uniform_int(0, 1) == 0 ? ArithmeticOp::Add : ArithmeticOp::Sub);
    }
    return {};
}

std::uint32_t random_subset_in(int lo, int hi, int k, Rng& rng) {
    std::vector<int> pool(static_cast<std::size_t>(hi - lo + 1));
    std::iota(pool.begin(), pool.end(), lo);
    std::uint32_t mask = 0;
    for (int i = 0; i < k; ++i) {
        const std::size_t j = static_cast<std::size_t>(i) + rng.index(pool.size() - static_cast<std::size_t>(i));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        mask |= 1u << pool[static_cast<std::size_t>(i)];
    }
    return mask;
}

std::uint32_t random_subset(int slots, int k, Rng& rng) { return random_subset_in(0, slots - 1, k, rng); }

std::uint32_t random_nonempty_subset(int slots, Rng& rng) {
    return random_subset(slots, rng.uniform_int(1, slots), rng);
}

std::uint32_t shift(std::uint32_t mask, int step) {
    return step >= 0 ? mask << step : mask >> (-step);
}

std::array<std::uint32_t, 3> rotated(const std::array<std::uint32_t, 3>& triple, int row) {
    return {triple[static_cast<std::size_t>(row % 3)], triple[static_cast<std::size_t>((row + 1) % 3)],
            triple[static_cast<std::size_t>((row + 2) % 3)]};
}

std::array<std::uint32_t, 3> distinct_values(int lo, int hi, Rng& rng) {
    std::vector<int> pool(static_cast<std::size_t>(hi - lo + 1));
    std::iota(pool.begin(), pool.end(), lo);
    rng.shuffle(std::span<int>(pool));
    return {static_cast<std::uint32_t>(pool[0]), static_cast<std::uint32_t>(pool[1]),
            static_cast<std::uint32_t>(pool[2])};
}

int binomial(int n, int k) {
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return static_cast<int>(r);
}

// Three values in [lo, hi] following an index-valued rule (entity attributes and Number).
std::array<int, 3> sample_values(const RuleInstance& rule, int lo, int hi, const ProblemPlan& plan,
                                 std::pair<int, Attribute> key, int row, Rng& rng) {
    switch (rule.kind) {
        case RuleKind::Constant: {
            const int v = rng.uniform_int(lo, hi);
            return {v, v, v};
        }
        case RuleKind::DistributeThree: {
            const auto t = rotated(plan.triples.at(key), row);
            return {static_cast<int>(t[0]), static_cast<int>(t[1]), static_cast<int>(t[2])};
        }
        case RuleKind::Progression: {
            const int s = rule.value;
            const int first = s > 0 ? lo : lo - 2 * s;
            const int last = s > 0 ? hi - 2 * s : hi;
            if (first > last) {
                throw GenerationExhausted("no in-bounds start for " + describe(rule));
            }
            const int a = rng.uniform_int(first, last);
            return {a, a + s, a + 2 * s};
        }
        case RuleKind::Arithmetic: {
            std::vector<std::pair<int, int>> pairs;
            for (int a = lo; a <= hi; ++a) {
                for (int b = std::max(1, lo); b <= hi; ++b) {
                    const int c = rule.value > 0 ? a + b : a - b;
                    if (c >= lo && c <= hi) pairs.emplace_back(a, b);
                }
            }
            if (pairs.empty()) throw GenerationExhausted("no in-bounds operands for " + describe(rule));
            const auto [a, b] = pairs[rng.index(pairs.size())];
            return {a, b, rule.value > 0 ? a + b : a - b};
        }
    }
    return {};
}

std::array<std::uint32_t, 3> sample_positions(const RuleInstance& rule, int slots, const ProblemPlan& plan,
                                              std::pair<int, Attribute> key, int row, Rng& rng,
                                              int max_rejections) {
    switch (rule.kind) {
        case RuleKind::Constant: {
            const auto mask = random_nonempty_subset(slots, rng);
            return {mask, mask, mask};
        }
        case RuleKind::DistributeThree: return rotated(plan.triples.at(key), row);
        case RuleKind::Progression: {
            const int s = rule.value;
            const int range = slots - 2 * std::abs(s);
            if (range <= 0) throw GenerationExhausted("no room to shift positions for " + describe(rule));
            const int lo = s > 0 ? 0 : 2 * std::abs(s);
            const auto mask = random_subset_in(lo, lo + range - 1, rng.uniform_int(1, range), rng);
            return {mask, shift(mask, s), shift(mask, 2 * s)};
        }
        case RuleKind::Arithmetic:
            for (int attempt = 0; attempt < max_rejections; ++attempt) {
                const auto a = random_nonempty_subset(slots, rng);
                const auto b = random_nonempty_subset(slots, rng);
                if (rule.value > 0 && (b & ~a) != 0) return {a, b, a | b};
                if (rule.value < 0 && (a & b) != 0 && (a & ~b) != 0) return {a, b, a & ~b};
            }
            throw GenerationExhausted("no position sets found for " + describe(rule));
    }
    return {};
}

Entity copy_of_any(const ComponentState& state, Rng& rng) {
    auto it = state.entities.begin();
    std::advance(it, static_cast<long>(rng.index(state.entities.size())));
    return it->second;
}

void set_occupancy(ComponentState& state, std::uint32_t mask, Rng& rng) {
    std::vector<Entity> pool;
    for (const auto& [slot, entity] : state.entities) pool.push_back(entity);
    ComponentState next;
    std::size_t used = 0;
    for (int s = 0; s < 32; ++s) {
        if (!((mask >> s) & 1u)) continue;
        next.occupancy.insert(s);
        auto it = state.entities.find(s);
        if (it != state.entities.end()) {
            next.entities[s] = it->second;
        } else {
            next.entities[s] = used < pool.size() ? pool[used] : copy_of_any(state, rng);
        }
        ++used;
    }
    state = std::move(next);
}

// Change one attribute of one component of `panel` to a different in-domain value.
bool mutate(Panel& panel, Configuration config, Rng& rng) {
    const int c = rng.uniform_int(0, component_count(config) - 1);
    const auto& layout = component_layout(config, c);
    auto& state = panel.components[static_cast<std::size_t>(c)];
    std::vector<Attribute> choices{Attribute::Type, Attribute::Size};
    if (layout.profile != ComponentProfile::Outer) choices.push_back(Attribute::Color);
    if (layout.slots > 1) {
        choices.push_back(Attribute::Number);
        choices.push_back(Attribute::Position);
    }
    const Attribute attr = choices[rng.index(choices.size())];
    const int slots = layout.slots;
    switch (attr) {
        case Attribute::Type:
        case Attribute::Size:
        case Attribute::Color: {
            const int domain = attribute_domain(attr);
            const int current = entity_value(state.entities.begin()->second, attr);
            const bool uniform = std::all_of(state.entities.begin(), state.entities.end(), [&](const auto& kv) {
                return entity_value(kv.second, attr) == current;
            });
            if (uniform) {
                int v = rng.uniform_int(0, domain - 2);
                if (v >= current) ++v;
                for (auto& [slot, entity] : state.entities) set_entity_value(entity, attr, v);
            } else {
                auto it = state.entities.begin();
                std::advance(it, static_cast<long>(rng.index(state.entities.size())));
                const int old = entity_value(it->second, attr);
                int v = rng.uniform_int(0, domain - 2);
                if (v >= old) ++v;
                set_entity_value(it->second, attr, v);
            }
            return true;
        }
        case Attribute::Number: {
            const int n = static_cast<int>(state.occupancy.size());
            int m = rng.uniform_int(1, slots - 1);
            if (m >= n) ++m;
            set_occupancy(state, random_subset(slots, m, rng), rng);
            return true;
        }
        case Attribute::Position: {
            const int n = static_cast<int>(state.occupancy.size());
            if (n == slots) return false;
            std::uint32_t current = 0;
            for (int s : state.occupancy) current |= 1u << s;
            std::uint32_t mask = current;
            while (mask == current) mask = random_subset(slots, n, rng);
            set_occupancy(state, mask, rng);
            return true;
        }
    }
    return false;
}

bool satisfies_all(const Problem& problem, int option) {
    const RowView third = problem_row(problem, 2, option);
    for (std::size_t c = 0; c < problem.rules.size(); ++c) {
        for (const auto& [attr, rule] : problem.rules[c]) {
            if (!oracle::check_rule(rule, static_cast<int>(c), third)) return false;
        }
    }
    return true;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (min_edits < 1 || max_edits > 3 || min_edits > max_edits) {
        throw UsageError("distractor edit range must lie within [1, 3]");
    }
    if (max_rejections <= 0) throw UsageError("max_rejections must be positive");
}

std::vector<RuleAssignment> sample_rule_assignment(Configuration config, Rng& rng,
                                                   const std::optional<ForcedRule>& forced) {
    if (forced && !rule_applicability(config, forced->component, forced->attribute, forced->kind)) {
        throw NotApplicable("forced rule does not exist in " + std::string(to_string(config)));
    }
    std::vector<RuleAssignment> out(static_cast<std::size_t>(component_count(config)));
    auto pick = [&](int c, Attribute attr) {
        RuleKind kind;
        if (forced && forced->component == c && forced->attribute == attr) {
            kind = forced->kind;
        } else {
            std::vector<RuleKind> kinds;
            for (RuleKind k : kAllRuleKinds) {
                if (rule_applicability(config, c, attr, k)) kinds.push_back(k);
            }
            kind = kinds[rng.index(kinds.size())];
        }
        out[static_cast<std::size_t>(c)][attr] = random_instance(attr, kind, rng);
    };
    for (int c = 0; c < component_count(config); ++c) {
        for (Attribute attr : kEntityAttributes) {
            if (attribute_governable(config, c, attr)) pick(c, attr);
        }
        if (attribute_governable(config, c, Attribute::Number)) {
            Attribute layout_attr = rng.uniform_int(0, 1) == 0 ? Attribute::Number : Attribute::Position;
            if (forced && forced->component == c &&
                (forced->attribute == Attribute::Number || forced->attribute == Attribute::Position)) {
                layout_attr = forced->attribute;
            }
            pick(c, layout_attr);
        }
    }
    return out;
}

ProblemPlan plan_problem(const std::vector<RuleAssignment>& rules, Configuration config, Rng& rng) {
    ProblemPlan plan{config, rules, {}};
    for (std::size_t c = 0; c < rules.size(); ++c) {
        const int slots = component_layout(config, static_cast<int>(c)).slots;
        for (const auto& [attr, rule] : rules[c]) {
            if (rule.kind != RuleKind::DistributeThree) continue;
            const auto key = std::make_pair(static_cast<int>(c), attr);
            if (attr == Attribute::Number) {
                plan.triples[key] = distinct_values(1, slots, rng);
            } else if (attr == Attribute::Position) {
                std::vector<int> counts;
                for (int k = 1; k <= slots; ++k) {
                    if (binomial(slots, k) >= 3) counts.push_back(k);
                }
                const int k = counts[rng.index(counts.size())];
                std::array<std::uint32_t, 3> masks{};
                for (std::size_t i = 0; i < 3; ++i) {
                    do {
                        masks[i] = random_subset(slots, k, rng);
                    } while (std::find(masks.begin(), masks.begin() + static_cast<long>(i), masks[i]) !=
                             masks.begin() + static_cast<long>(i));
                }
                plan.triples[key] = masks;
            } else {
                plan.triples[key] = distinct_values(0, attribute_domain(attr) - 1, rng);
            }
        }
    }
    return plan;
}

std::array<Panel, kRowLength> apply_rules_to_row(const ProblemPlan& plan, int row_index, Rng& rng,
                                                 int max_rejections) {
    std::array<Panel, kRowLength> panels;
    for (auto& p : panels) p.components.resize(plan.rules.size());
    for (std::size_t c = 0; c < plan.rules.size(); ++c) {
        const int comp = static_cast<int>(c);
        const auto& layout = component_layout(plan.config, comp);
        const auto& rules = plan.rules[c];

        std::array<std::uint32_t, 3> masks{1u, 1u, 1u};
        if (auto it = rules.find(Attribute::Number); it != rules.end()) {
            const auto counts = sample_values(it->second, 1, layout.slots, plan, {comp, Attribute::Number}, row_index, rng);
            for (std::size_t i = 0; i < 3; ++i) masks[i] = random_subset(layout.slots, counts[i], rng);
        } else if (auto pos = rules.find(Attribute::Position); pos != rules.end()) {
            masks = sample_positions(pos->second, layout.slots, plan, {comp, Attribute::Position}, row_index, rng,
                                     max_rejections);
        }

        // Per attribute: either one value per panel or, under Constant, one value per slot.
        std::map<Attribute, std::array<int, 3>> per_panel;
        std::map<Attribute, std::vector<int>> per_slot;
        for (Attribute attr : kEntityAttributes) {
            auto it = rules.find(attr);
            if (it == rules.end()) {
                per_panel[attr] = {0, 0, 0};
            } else if (it->second.kind == RuleKind::Constant) {
                auto& table = per_slot[attr];
                for (int s = 0; s < layout.slots; ++s) table.push_back(rng.uniform_int(0, attribute_domain(attr) - 1));
            } else {
                per_panel[attr] =
                    sample_values(it->second, 0, attribute_domain(attr) - 1, plan, {comp, attr}, row_index, rng);
            }
        }

        for (std::size_t i = 0; i < 3; ++i) {
            auto& state = panels[i].components[c];
            for (int s = 0; s < layout.slots; ++s) {
                if (!((masks[i] >> s) & 1u)) continue;
                state.occupancy.insert(s);
                Entity e;
                for (Attribute attr : kEntityAttributes) {
                    const int v = per_slot.contains(attr) ? per_slot[attr][static_cast<std::size_t>(s)] : per_panel[attr][i];
                    set_entity_value(e, attr, v);
                }
                state.entities[s] = e;
            }
        }
    }
    return panels;
}

std::array<Panel, kRowLength> apply_rules_to_row(const std::vector<RuleAssignment>& rules, Configuration config,
                                                 Rng& rng) {
    const auto plan = plan_problem(rules, config, rng);
    return apply_rules_to_row(plan, 0, rng);
}

Problem generate_problem_with(const std::vector<RuleAssignment>& rules, const GeneratorConfig& gcfg, Rng& rng) {
    gcfg.validate();
    const Configuration config = gcfg.config;
    if (static_cast<int>(rules.size()) != component_count(config)) {
        throw UsageError("rule assignment does not match the configuration's components");
    }
    for (int attempt = 0; attempt < gcfg.max_rejections; ++attempt) {
        const auto plan = plan_problem(rules, config, rng);
        Problem problem;
        problem.config = config;
        problem.rules = rules;
        Panel correct;
        for (int r = 0; r < kRowLength; ++r) {
            auto row = apply_rules_to_row(plan, r, rng, gcfg.max_rejections);
            for (int col = 0; col < kRowLength; ++col) {
                if (r == 2 && col == 2) {
                    correct = std::move(row[2]);
                } else {
                    problem.context[static_cast<std::size_t>(r * 3 + col)] = std::move(row[static_cast<std::size_t>(col)]);
                }
            }
        }
        problem.answer = rng.uniform_int(0, kOptionCount - 1);
        problem.options[static_cast<std::size_t>(problem.answer)] = correct;

        // The rules readable from rows 1-2 must be exactly the sampled ones on every
        // rule-governed attribute, and the correct panel must satisfy all of them.
        const auto shared = oracle::infer_shared_rules(problem);
        bool consistent = true;
        for (std::size_t c = 0; c < rules.size() && consistent; ++c) {
            for (const auto& [attr, rule] : rules[c]) {
                auto it = shared[c].find(attr);
                if (it == shared[c].end() || !(it->second == rule)) {
                    consistent = false;
                    break;
                }
            }
        }
        if (!consistent) continue;
        const int total = std::accumulate(shared.begin(), shared.end(), 0,
                                          [](int acc, const RuleAssignment& r) { return acc + static_cast<int>(r.size()); });
        if (oracle::count_satisfied(problem, shared, problem.answer) != total) continue;

        std::vector<Panel> chosen{correct};
        bool complete = true;
        for (int k = 0; k < kOptionCount && complete; ++k) {
            if (k == problem.answer) continue;
            bool placed = false;
            for (int tries = 0; tries < gcfg.max_rejections && !placed; ++tries) {
                Panel candidate = correct;
                const int edits = rng.uniform_int(gcfg.min_edits, gcfg.max_edits);
                for (int e = 0; e < edits; ++e) mutate(candidate, config, rng);
                if (std::find(chosen.begin(), chosen.end(), candidate) != chosen.end()) continue;
                problem.options[static_cast<std::size_t>(k)] = candidate;
                if (satisfies_all(problem, k)) continue;
                chosen.push_back(std::move(candidate));
                placed = true;
            }
            complete = placed;
        }
        if (!complete) continue;
        return problem;
    }
    throw GenerationExhausted("no consistent problem for the given assignment in " + std::string(to_string(config)));
}

Problem generate_problem(const GeneratorConfig& gcfg, Rng& rng, const std::optional<ForcedRule>& forced) {
    gcfg.validate();
    int spent = 0;
    while (spent < gcfg.max_rejections) {
        const auto rules = sample_rule_assignment(gcfg.config, rng, forced);
        GeneratorConfig local = gcfg;
        local.max_rejections = std::min(kAttemptsPerAssignment, gcfg.max_rejections - spent);
        spent += local.max_rejections;
        try {
            return generate_problem_with(rules, local, rng);
        } catch (const GenerationExhausted&) {
            // infeasible or unlucky assignment; draw another
        }
    }
    throw GenerationExhausted("rejection budget exhausted for " + std::string(to_string(gcfg.config)));
}

Problem generate_indexed(const GeneratorConfig& gcfg, std::uint64_t index, const std::optional<ForcedRule>& forced) {
    Rng rng(Rng::mix(gcfg.seed) ^ Rng::mix(index + 0x5bd1e995ULL));
    return generate_problem(gcfg, rng, forced);
}

std::vector<Problem> generate_dataset(const GeneratorConfig& gcfg, int count) {
    if (count <= 0) throw UsageError("dataset count must be positive");
    std::vector<Problem> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(generate_indexed(gcfg, static_cast<std::uint64_t>(i)));
    return out;
}

}  // namespace lrpm
