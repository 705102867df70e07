#include "doctest.h"
#include "lrpm/errors.hpp"
#include "lrpm/oracle.hpp"

using namespace lrpm;

namespace {

Panel single(int type, int size, int color) {
    Panel p;
    p.components.resize(1);
    p.components[0].occupancy = {0};
    p.components[0].entities[0] = Entity{type, size, color};
    return p;
}

Panel grid(Configuration config, std::initializer_list<int> slots, Entity e = {}) {
    Panel p;
    p.components.resize(1);
    for (int s : slots) {
        p.components[0].occupancy.insert(s);
        p.components[0].entities[s] = e;
    }
    (void)config;
    return p;
}

struct Row {
    std::array<Panel, 3> panels;
    Configuration config;
    RowView view() const { return RowView{config, {&panels[0], &panels[1], &panels[2]}}; }
};

}  // namespace

TEST_CASE("check_rule examples") {
    Row types{{single(1, 0, 0), single(1, 3, 2), single(1, 5, 9)}, Configuration::Center};
    CHECK(oracle::check_rule(RuleInstance::constant(Attribute::Type), 0, types.view()));

    Row numbers{{grid(Configuration::Grid3x3, {0, 1}), grid(Configuration::Grid3x3, {0, 1, 2}),
                 grid(Configuration::Grid3x3, {0, 1, 2, 3, 4})},
                Configuration::Grid3x3};
    CHECK(oracle::check_rule(RuleInstance::arithmetic(Attribute::Number, ArithmeticOp::Add), 0, numbers.view()));

    Row sizes{{single(0, 0, 0), single(0, 2, 0), single(0, 4, 0)}, Configuration::Center};
    CHECK_FALSE(oracle::check_rule(RuleInstance::progression(Attribute::Size, 1), 0, sizes.view()));
    CHECK(oracle::check_rule(RuleInstance::progression(Attribute::Size, 2), 0, sizes.view()));

    CHECK_THROWS_AS(oracle::check_rule(RuleInstance::constant(Attribute::Number), 0, sizes.view()), NotApplicable);
}

TEST_CASE("position arithmetic is set union and difference") {
    Row add{{grid(Configuration::Grid3x3, {0, 1}), grid(Configuration::Grid3x3, {1, 2}),
             grid(Configuration::Grid3x3, {0, 1, 2})},
            Configuration::Grid3x3};
    CHECK(oracle::check_rule(RuleInstance::arithmetic(Attribute::Position, ArithmeticOp::Add), 0, add.view()));
    Row sub{{grid(Configuration::Grid3x3, {0, 1, 2}), grid(Configuration::Grid3x3, {1}),
             grid(Configuration::Grid3x3, {0, 2})},
            Configuration::Grid3x3};
    CHECK(oracle::check_rule(RuleInstance::arithmetic(Attribute::Position, ArithmeticOp::Sub), 0, sub.view()));
}

TEST_CASE("label_row examples") {
    Row descending{{single(0, 3, 0), single(0, 2, 0), single(0, 1, 0)}, Configuration::Center};
    const int cls = oracle::label_row(descending.view(), 0, Attribute::Size, RuleKind::Progression);
    CHECK(oracle::rule_from_class(Attribute::Size, RuleKind::Progression, cls).value == -1);

    Row mixed{{single(1, 0, 0), single(4, 0, 0), single(1, 0, 0)}, Configuration::Center};
    CHECK(oracle::label_row(mixed.view(), 0, Attribute::Type, RuleKind::Constant) == 0);

    Row colors{{single(0, 0, 4), single(0, 0, 1), single(0, 0, 3)}, Configuration::Center};
    const int arith = oracle::label_row(colors.view(), 0, Attribute::Color, RuleKind::Arithmetic);
    CHECK(oracle::rule_from_class(Attribute::Color, RuleKind::Arithmetic, arith).value ==
          static_cast<int>(ArithmeticOp::Sub));

    CHECK_THROWS_AS(oracle::label_row(colors.view(), 0, Attribute::Number, RuleKind::Constant), NotApplicable);
}

TEST_CASE("label scheme class counts and round trip") {
    CHECK(oracle::class_count(RuleKind::Constant) == 2);
    CHECK(oracle::class_count(RuleKind::DistributeThree) == 2);
    CHECK(oracle::class_count(RuleKind::Progression) == 5);
    CHECK(oracle::class_count(RuleKind::Arithmetic) == 3);
    for (auto kind : kAllRuleKinds) {
        for (int cls = 1; cls < oracle::class_count(kind); ++cls) {
            CHECK(oracle::rule_class(oracle::rule_from_class(Attribute::Size, kind, cls)) == cls);
        }
    }
}

TEST_CASE("infer_rules examples") {
    Row d3{{single(0, 0, 1), single(0, 0, 7), single(0, 0, 4)}, Configuration::Center};
    auto rules = oracle::infer_rules(d3.view());
    REQUIRE(rules.size() == 1);
    REQUIRE(rules[0].at(Attribute::Color).has_value());
    CHECK(rules[0].at(Attribute::Color)->kind == RuleKind::DistributeThree);

    Row same{{single(2, 3, 4), single(2, 3, 4), single(2, 3, 4)}, Configuration::Center};
    auto constant = oracle::infer_rules(same.view());
    for (auto attr : {Attribute::Type, Attribute::Size, Attribute::Color}) {
        REQUIRE(constant[0].at(attr).has_value());
        CHECK(constant[0].at(attr)->kind == RuleKind::Constant);
    }
    CHECK(oracle::infer_rules(same.view()) == constant);
}

TEST_CASE("label agrees with check_rule") {
    const std::array<std::array<int, 3>, 6> triples{{{0, 1, 2}, {2, 1, 0}, {1, 1, 1}, {1, 2, 3}, {4, 1, 3}, {0, 5, 2}}};
    for (const auto& t : triples) {
        Row row{{single(0, t[0], 0), single(0, t[1], 0), single(0, t[2], 0)}, Configuration::Center};
        for (auto kind : kAllRuleKinds) {
            if (!rule_applicability(Configuration::Center, 0, Attribute::Size, kind)) continue;
            const int label = oracle::label_row(row.view(), 0, Attribute::Size, kind);
            bool any = false;
            for (int cls = 1; cls < oracle::class_count(kind); ++cls) {
                any = any || oracle::check_rule(oracle::rule_from_class(Attribute::Size, kind, cls), 0, row.view());
            }
            CHECK((label != 0) == any);
        }
    }
}

TEST_CASE("identical options resolve to index 0") {
    Problem p;
    p.config = Configuration::Center;
    for (auto& panel : p.context) panel = single(1, 2, 3);
    for (auto& panel : p.options) panel = single(1, 2, 3);
    CHECK(oracle::solve_symbolic(p) == 0);
}

TEST_CASE("rows sharing no rule raise NoConsistentRules") {
    Problem p;
    p.config = Configuration::Center;
    // Row 1 follows +1 progressions (and distinctness), row 2 follows nothing.
    const std::array<Panel, 8> context{single(0, 0, 0), single(1, 1, 1), single(2, 2, 2),
                                       single(3, 3, 3), single(1, 1, 1), single(1, 1, 1),
                                       single(0, 0, 0), single(0, 0, 0)};
    p.context = context;
    for (auto& panel : p.options) panel = single(0, 0, 0);
    CHECK_THROWS_AS(oracle::solve_symbolic(p), NoConsistentRules);
}
