#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "lrpm/core.hpp"

namespace lrpm {

/// Three panels read as one row of a matrix.
struct RowView {
    Configuration config = Configuration::Center;
    std::array<const Panel*, kRowLength> panels{};
};

RowView problem_row(const Problem& problem, int row, int option = -1);

namespace oracle {

/// Whether `row` satisfies `rule` on `component`.
///
/// Entity attributes (type, size, color) are checked per slot for Constant; all
/// other kinds need every entity of a panel to share the value. Arithmetic on
/// index-valued attributes requires a non-zero second operand; on Position it is
/// set union (Add) or set difference (Sub) and must change the first set.
/// Position Progression shifts every occupied slot by the step without wrapping.
bool check_rule(const RuleInstance& rule, int component, const RowView& row);

/// First rule (in kSearchOrder, values in ascending order) holding on the row, if any.
std::optional<RuleInstance> first_rule(int component, Attribute attr, const RowView& row);

using RowRules = std::map<Attribute, std::optional<RuleInstance>>;

/// Per component, the first-matching rule of every governable attribute.
std::vector<RowRules> infer_rules(const RowView& row);

/// Rules shared by rows 1 and 2: for each attribute the first kind in search
/// order that holds on both rows with the same value.
std::vector<RuleAssignment> infer_shared_rules(const Problem& problem);

/// Number of shared rules option `option` satisfies when placed in row 3.
int count_satisfied(const Problem& problem, const std::vector<RuleAssignment>& rules, int option);

/// Index of the option satisfying the most shared rules, lowest index on ties.
/// Throws NoConsistentRules when rows 1 and 2 share no rule at all.
int solve_symbolic(const Problem& problem);

/// Class count of a rule net: 2 for Constant/DistributeThree, 5 for
/// Progression {none,-2,-1,+1,+2}, 3 for Arithmetic {none,add,sub}.
int class_count(RuleKind kind);
int rule_class(const RuleInstance& rule);
RuleInstance rule_from_class(Attribute attr, RuleKind kind, int cls);

/// Training label of a row for the (attr, kind) rule net.
int label_row(const RowView& row, int component, Attribute attr, RuleKind kind);

}  // namespace oracle
}  // namespace lrpm
