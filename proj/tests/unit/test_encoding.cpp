#include "doctest.h"
#include "lrpm/encoding.hpp"
#include "lrpm/errors.hpp"
#include "lrpm/generator.hpp"

using namespace lrpm;

TEST_CASE("multihot dimensions") {
    CHECK(multihot_dim(Configuration::Center) == 21);
    CHECK(multihot_dim(Configuration::LeftRight) == 42);
    CHECK(multihot_dim(Configuration::UpDown) == 42);
    CHECK(multihot_dim(Configuration::OutInCenter) == 42);
    CHECK(multihot_dim(Configuration::Grid2x2) == 88);
    CHECK(multihot_dim(Configuration::Grid3x3) == 198);
    CHECK(multihot_dim(Configuration::OutInGrid) == 109);
}

TEST_CASE("Center entity encoding positions") {
    Panel p;
    p.components.resize(1);
    p.components[0].occupancy = {0};
    p.components[0].entities[0] = Entity{1, 2, 0};
    const auto v = encode(p, Configuration::Center);
    REQUIRE(v.size() == 21);
    for (int i = 0; i < 21; ++i) CHECK(v[i] == ((i == 1 || i == 7 || i == 11) ? 1.0 : 0.0));
}

TEST_CASE("empty grid slot encodes as zeros") {
    Panel p;
    p.components.resize(1);
    p.components[0].occupancy = {1};
    p.components[0].entities[1] = Entity{4, 5, 9};
    const auto v = encode(p, Configuration::Grid2x2);
    for (int i = 0; i < 22; ++i) CHECK(v[i] == 0.0);
    CHECK(v[22] == 1.0);
}

TEST_CASE("encode rejects invalid panels") {
    Panel p;
    p.components.resize(1);
    p.components[0].occupancy = {0};
    CHECK_THROWS_AS(encode(p, Configuration::Center), InvalidPanel);
}

TEST_CASE("decode edge cases") {
    std::vector<double> uniform(21, 0.0);
    const Panel p = decode(uniform, Configuration::Center);
    CHECK(p.components[0].entities.at(0) == Entity{0, 0, 0});
    std::vector<double> zeros(88, 0.0);
    CHECK(validate_panel(decode(zeros, Configuration::Grid2x2), Configuration::Grid2x2).empty());
    std::vector<double> wrong(20, 0.0);
    CHECK_THROWS_AS(decode(wrong, Configuration::Center), DimensionMismatch);
}

TEST_CASE("round trip on generator panels") {
    for (auto config : kAllConfigurations) {
        GeneratorConfig g{config, 31};
        for (const auto& problem : generate_dataset(g, 20)) {
            for (const auto& panel : problem.context) {
                const auto v = encode(panel, config);
                CHECK(v.size() == static_cast<std::size_t>(multihot_dim(config)));
                CHECK(decode(v, config) == panel);
                CHECK(encode(decode(v, config), config) == v);
            }
        }
    }
}
