#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lrpm {

// Domain sizes of the entity-level attributes.
inline constexpr int kTypeCount = 5;    // triangle, square, pentagon, hexagon, circle
inline constexpr int kSizeCount = 6;
inline constexpr int kColorCount = 10;
inline constexpr int kEntityBlockWidth = kTypeCount + kSizeCount + kColorCount;

inline constexpr int kRowLength = 3;
inline constexpr int kContextPanels = 8;
inline constexpr int kOptionCount = 8;

enum class Attribute : std::uint8_t { Type, Size, Color, Number, Position };
inline constexpr std::array<Attribute, 5> kAllAttributes{Attribute::Type, Attribute::Size, Attribute::Color,
                                                         Attribute::Number, Attribute::Position};

enum class RuleKind : std::uint8_t { Constant, DistributeThree, Progression, Arithmetic };
inline constexpr std::array<RuleKind, 4> kAllRuleKinds{RuleKind::Constant, RuleKind::DistributeThree,
                                                       RuleKind::Progression, RuleKind::Arithmetic};
/// Order in which rule kinds are tried when inferring the rule governing an attribute.
/// The first kind that holds wins, so this order carries meaning.
inline constexpr std::array<RuleKind, 4> kSearchOrder{RuleKind::Constant, RuleKind::Progression,
                                                      RuleKind::Arithmetic, RuleKind::DistributeThree};

enum class Configuration : std::uint8_t { Center, LeftRight, UpDown, OutInCenter, Grid2x2, Grid3x3, OutInGrid };
inline constexpr std::array<Configuration, 7> kAllConfigurations{
    Configuration::Center,  Configuration::LeftRight, Configuration::UpDown,   Configuration::OutInCenter,
    Configuration::Grid2x2, Configuration::Grid3x3,   Configuration::OutInGrid};

/// Which column group of the applicability table a component belongs to.
enum class ComponentProfile : std::uint8_t { Single, Outer, Grid };

struct ComponentLayout {
    std::string_view name;
    int slots;      // number of placement slots
    int grid_side;  // slots are laid out grid_side x grid_side, row-major
    ComponentProfile profile;
};

std::span<const ComponentLayout> components(Configuration config);
int component_count(Configuration config);
const ComponentLayout& component_layout(Configuration config, int component);

struct Entity {
    int type = 0;
    int size = 0;
    int color = 0;

    auto operator<=>(const Entity&) const = default;
};

int attribute_domain(Attribute attr);
int entity_value(const Entity& entity, Attribute attr);
void set_entity_value(Entity& entity, Attribute attr, int value);

/// Symbolic content of one component within a panel.
struct ComponentState {
    std::set<int> occupancy;
    std::map<int, Entity> entities;  // slot -> entity

    bool operator==(const ComponentState&) const = default;
};

struct Panel {
    std::vector<ComponentState> components;

    bool operator==(const Panel&) const = default;
};

enum class ArithmeticOp : int { Add = 1, Sub = -1 };

/// (attribute, rule kind, value). `value` is the signed step for Progression,
/// +1 (Add) or -1 (Sub) for Arithmetic, and 0 otherwise.
struct RuleInstance {
    Attribute attribute = Attribute::Type;
    RuleKind kind = RuleKind::Constant;
    int value = 0;

    static RuleInstance constant(Attribute attr) { return {attr, RuleKind::Constant, 0}; }
    static RuleInstance distribute_three(Attribute attr) { return {attr, RuleKind::DistributeThree, 0}; }
    static RuleInstance progression(Attribute attr, int step) { return {attr, RuleKind::Progression, step}; }
    static RuleInstance arithmetic(Attribute attr, ArithmeticOp op) {
        return {attr, RuleKind::Arithmetic, static_cast<int>(op)};
    }

    bool operator==(const RuleInstance&) const = default;
};

bool rule_value_legal(RuleKind kind, int value);

/// Rules of one component, one per rule-governed attribute.
using RuleAssignment = std::map<Attribute, RuleInstance>;

struct Problem {
    Configuration config = Configuration::Center;
    std::array<Panel, kContextPanels> context;  // rows 1-2 complete, row 3 first two cells
    std::array<Panel, kOptionCount> options;
    int answer = 0;
    std::vector<RuleAssignment> rules;  // one per component

    bool operator==(const Problem&) const = default;

    /// Panel at (row, col) of the matrix; (2, 2) resolves to `options[option]`.
    const Panel& cell(int row, int col, int option) const;
    std::array<const Panel*, kRowLength> row(int r, int option = -1) const;
};

bool rule_applicability(Configuration config, int component, Attribute attr, RuleKind kind);
/// True when at least one rule kind exists for the attribute in the component.
bool attribute_governable(Configuration config, int component, Attribute attr);

/// Every invariant violation in `panel`; empty means the panel is well formed.
/// With `allow_empty`, components without entities are accepted.
std::vector<std::string> validate_panel(const Panel& panel, Configuration config, bool allow_empty = false);

/// Scaling factor of a size index, 0.4 + 0.1 * idx.
double size_scale(int size_index);

std::string_view to_string(Attribute attr);
std::string_view to_string(RuleKind kind);
std::string_view to_string(Configuration config);
std::string_view short_name(Configuration config);
std::optional<Attribute> parse_attribute(std::string_view text);
std::optional<RuleKind> parse_rule_kind(std::string_view text);
std::optional<Configuration> parse_configuration(std::string_view text);
std::string describe(const RuleInstance& rule);

}  // namespace lrpm
