#include "lrpm/core.hpp"

#include <algorithm>
#include <cctype>

#include "lrpm/errors.hpp"

namespace lrpm {

namespace {

constexpr std::array<ComponentLayout, 1> kCenter{{{"center", 1, 1, ComponentProfile::Single}}};
constexpr std::array<ComponentLayout, 2> kLeftRight{{{"left", 1, 1, ComponentProfile::Single},
                                                     {"right", 1, 1, ComponentProfile::Single}}};
constexpr std::array<ComponentLayout, 2> kUpDown{{{"up", 1, 1, ComponentProfile::Single},
                                                  {"down", 1, 1, ComponentProfile::Single}}};
constexpr std::array<ComponentLayout, 2> kOutInCenter{{{"out", 1, 1, ComponentProfile::Outer},
                                                       {"in", 1, 1, ComponentProfile::Single}}};
constexpr std::array<ComponentLayout, 1> kGrid2x2{{{"grid", 4, 2, ComponentProfile::Grid}}};
constexpr std::array<ComponentLayout, 1> kGrid3x3{{{"grid", 9, 3, ComponentProfile::Grid}}};
constexpr std::array<ComponentLayout, 2> kOutInGrid{{{"out", 1, 1, ComponentProfile::Outer},
                                                     {"in", 4, 2, ComponentProfile::Grid}}};

// Rule existence per component profile, rows = Type, Size, Color, Number, Position;
// columns = Constant, DistributeThree, Progression, Arithmetic.
using ApplicabilityGrid = std::array<std::array<bool, 4>, 5>;

constexpr ApplicabilityGrid kSingleRules{{
    {true, true, true, false},
    {true, true, true, true},
    {true, true, true, true},
    {false, false, false, false},
    {false, false, false, false},
}};
constexpr ApplicabilityGrid kOuterRules{{
    {true, true, true, false},
    {true, true, true, false},
    {false, false, false, false},
    {false, false, false, false},
    {false, false, false, false},
}};
constexpr ApplicabilityGrid kGridRules{{
    {true, true, true, false},
    {true, true, true, true},
    {true, true, true, true},
    {true, true, true, true},
    {true, true, true, true},
}};

const ApplicabilityGrid& grid_for(ComponentProfile profile) {
    switch (profile) {
        case ComponentProfile::Single: return kSingleRules;
        case ComponentProfile::Outer: return kOuterRules;
        case ComponentProfile::Grid: return kGridRules;
    }
    return kSingleRules;
}

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    out.erase(std::remove_if(out.begin(), out.end(), [](char c) { return c == '-' || c == '_' || c == ' '; }),
              out.end());
    return out;
}

}  // namespace

std::span<const ComponentLayout> components(Configuration config) {
    switch (config) {
        case Configuration::Center: return kCenter;
        case Configuration::LeftRight: return kLeftRight;
        case Configuration::UpDown: return kUpDown;
        case Configuration::OutInCenter: return kOutInCenter;
        case Configuration::Grid2x2: return kGrid2x2;
        case Configuration::Grid3x3: return kGrid3x3;
        case Configuration::OutInGrid: return kOutInGrid;
    }
    throw UsageError("unknown configuration");
}

int component_count(Configuration config) { return static_cast<int>(components(config).size()); }

const ComponentLayout& component_layout(Configuration config, int component) {
    auto layouts = components(config);
    if (component < 0 || component >= static_cast<int>(layouts.size())) {
        throw UsageError("component index " + std::to_string(component) + " out of range for " +
                         std::string(to_string(config)));
    }
    return layouts[static_cast<std::size_t>(component)];
}

int attribute_domain(Attribute attr) {
    switch (attr) {
        case Attribute::Type: return kTypeCount;
        case Attribute::Size: return kSizeCount;
        case Attribute::Color: return kColorCount;
        case Attribute::Number: return 9;
        case Attribute::Position: return 9;
    }
    return 0;
}

int entity_value(const Entity& entity, Attribute attr) {
    switch (attr) {
        case Attribute::Type: return entity.type;
        case Attribute::Size: return entity.size;
        case Attribute::Color: return entity.color;
        default: throw UsageError("not an entity attribute: " + std::string(to_string(attr)));
    }
}

void set_entity_value(Entity& entity, Attribute attr, int value) {
    switch (attr) {
        case Attribute::Type: entity.type = value; break;
        case Attribute::Size: entity.size = value; break;
        case Attribute::Color: entity.color = value; break;
        default: throw UsageError("not an entity attribute: " + std::string(to_string(attr)));
    }
}

bool rule_value_legal(RuleKind kind, int value) {
    switch (kind) {
        case RuleKind::Constant:
        case RuleKind::DistributeThree: return value == 0;
        case RuleKind::Progression: return value == -2 || value == -1 || value == 1 || value == 2;
        case RuleKind::Arithmetic: return value == 1 || value == -1;
    }
    return false;
}

const Panel& Problem::cell(int r, int col, int option) const {
    if (r < 0 || r >= kRowLength || col < 0 || col >= kRowLength) throw UsageError("cell index out of range");
    if (r == 2 && col == 2) {
        if (option < 0 || option >= kOptionCount) throw UsageError("option index out of range");
        return options[static_cast<std::size_t>(option)];
    }
    return context[static_cast<std::size_t>(r * kRowLength + col)];
}

std::array<const Panel*, kRowLength> Problem::row(int r, int option) const {
    return {&cell(r, 0, option), &cell(r, 1, option), &cell(r, 2, option)};
}

bool rule_applicability(Configuration config, int component, Attribute attr, RuleKind kind) {
    const auto& layout = component_layout(config, component);
    return grid_for(layout.profile)[static_cast<std::size_t>(attr)][static_cast<std::size_t>(kind)];
}

bool attribute_governable(Configuration config, int component, Attribute attr) {
    return std::any_of(kAllRuleKinds.begin(), kAllRuleKinds.end(),
                       [&](RuleKind k) { return rule_applicability(config, component, attr, k); });
}

std::vector<std::string> validate_panel(const Panel& panel, Configuration config, bool allow_empty) {
    std::vector<std::string> violations;
    const auto layouts = components(config);
    if (panel.components.size() != layouts.size()) {
        violations.push_back("expected " + std::to_string(layouts.size()) + " components, found " +
                             std::to_string(panel.components.size()));
        return violations;
    }
    for (std::size_t c = 0; c < layouts.size(); ++c) {
        const auto& layout = layouts[c];
        const auto& state = panel.components[c];
        const std::string where = std::string(layout.name) + ": ";
        if (state.occupancy.empty() && !allow_empty) violations.push_back(where + "no occupied slot");
        for (int slot : state.occupancy) {
            if (slot < 0 || slot >= layout.slots) {
                violations.push_back(where + "slot " + std::to_string(slot) + " out of range");
            }
            if (!state.entities.contains(slot)) {
                violations.push_back(where + "occupied slot " + std::to_string(slot) + " has no entity");
            }
        }
        for (const auto& [slot, entity] : state.entities) {
            if (!state.occupancy.contains(slot)) {
                violations.push_back(where + "entity at unoccupied slot " + std::to_string(slot));
            }
            if (entity.type < 0 || entity.type >= kTypeCount) violations.push_back(where + "type out of range");
            if (entity.size < 0 || entity.size >= kSizeCount) violations.push_back(where + "size out of range");
            if (entity.color < 0 || entity.color >= kColorCount) violations.push_back(where + "color out of range");
            if (layout.profile == ComponentProfile::Outer && entity.color != 0) {
                violations.push_back(where + "outer component color must stay at index 0");
            }
        }
    }
    return violations;
}

double size_scale(int size_index) { return 0.4 + 0.1 * size_index; }

std::string_view to_string(Attribute attr) {
    switch (attr) {
        case Attribute::Type: return "type";
        case Attribute::Size: return "size";
        case Attribute::Color: return "color";
        case Attribute::Number: return "number";
        case Attribute::Position: return "position";
    }
    return "?";
}

std::string_view to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::Constant: return "constant";
        case RuleKind::DistributeThree: return "distribute_three";
        case RuleKind::Progression: return "progression";
        case RuleKind::Arithmetic: return "arithmetic";
    }
    return "?";
}

std::string_view to_string(Configuration config) {
    switch (config) {
        case Configuration::Center: return "center";
        case Configuration::LeftRight: return "left_right";
        case Configuration::UpDown: return "up_down";
        case Configuration::OutInCenter: return "out_in_center";
        case Configuration::Grid2x2: return "grid2x2";
        case Configuration::Grid3x3: return "grid3x3";
        case Configuration::OutInGrid: return "out_in_grid";
    }
    return "?";
}

std::string_view short_name(Configuration config) {
    switch (config) {
        case Configuration::Center: return "Center";
        case Configuration::LeftRight: return "Left-Right";
        case Configuration::UpDown: return "Up-Down";
        case Configuration::OutInCenter: return "Out-In Center";
        case Configuration::Grid2x2: return "2x2 Grid";
        case Configuration::Grid3x3: return "3x3 Grid";
        case Configuration::OutInGrid: return "Out-In Grid";
    }
    return "?";
}

std::optional<Attribute> parse_attribute(std::string_view text) {
    const auto key = lower(text);
    for (auto attr : kAllAttributes) {
        if (lower(to_string(attr)) == key) return attr;
    }
    return std::nullopt;
}

std::optional<RuleKind> parse_rule_kind(std::string_view text) {
    const auto key = lower(text);
    for (auto kind : kAllRuleKinds) {
        if (lower(to_string(kind)) == key) return kind;
    }
    if (key == "d3" || key == "distributethree") return RuleKind::DistributeThree;
    return std::nullopt;
}

std::optional<Configuration> parse_configuration(std::string_view text) {
    const auto key = lower(text);
    for (auto config : kAllConfigurations) {
        if (lower(to_string(config)) == key || lower(short_name(config)) == key) return config;
    }
    if (key == "lr") return Configuration::LeftRight;
    if (key == "ud") return Configuration::UpDown;
    if (key == "oic") return Configuration::OutInCenter;
    if (key == "oig") return Configuration::OutInGrid;
    return std::nullopt;
}

std::string describe(const RuleInstance& rule) {
    std::string out = "(" + std::string(to_string(rule.attribute)) + ", " + std::string(to_string(rule.kind));
    if (rule.kind == RuleKind::Progression) {
        out += (rule.value > 0 ? ", +" : ", ") + std::to_string(rule.value);
    } else if (rule.kind == RuleKind::Arithmetic) {
        out += rule.value > 0 ? ", add" : ", sub";
    }
    return out + ")";
}

}  // namespace lrpm
