#include <string>

#include "doctest.h"
#include "treekey/config.hpp"
#include "treekey/errors.hpp"

using namespace treekey;

namespace {

const char* kGood = R"({
  "tree": {
    "vertices": ["left", "mid", "right"],
    "edges": [
      {"u": "left", "v": "mid", "rho": 0.9},
      {"u": "mid", "v": "right", "rho": 0.9}
    ]
  },
  "rates": {"p": 5, "n": 4, "k": 2},
  "protocol": {"delta": 0.2, "trials": 500, "seed": 7, "nout_cap": 200},
  "evaluate": {"bins": 16, "permutations": 200}
})";

}  // namespace

TEST_SUITE_BEGIN("config");

TEST_CASE("well-formed text parses completely") {
    Config cfg = parse_config_text(kGood);
    REQUIRE(cfg.names.size() == 3);
    // names map to dense ids in sorted order
    CHECK(cfg.names[0] == "left");
    CHECK(cfg.names[1] == "mid");
    CHECK(cfg.names[2] == "right");
    CHECK(cfg.id_of.at("mid") == 1);
    CHECK(cfg.tree.rho(0, 1) == 0.9);
    CHECK(cfg.has_rates);
    CHECK(cfg.p == 5);
    CHECK(cfg.n == 4);
    CHECK(cfg.code_dims.at(0) == 2);
    CHECK(cfg.code_dims.at(2) == 2);
    CHECK(cfg.protocol.delta == 0.2);
    CHECK(cfg.protocol.trials == 500);
    CHECK(cfg.protocol.seed == 7);
    CHECK(cfg.protocol.nout_cap == 200);
    CHECK(cfg.evaluate.bins == 16);
    CHECK_FALSE(cfg.root.has_value());
}

TEST_CASE("per-vertex dimensions and named root") {
    Config cfg = parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.8}]
      },
      "rates": {"p": 3, "n": 6, "k": {"a": 2, "b": 3}},
      "protocol": {"root": "b", "middle_dim": 1}
    })");
    CHECK(cfg.code_dims.at(0) == 2);
    CHECK(cfg.code_dims.at(1) == 3);
    REQUIRE(cfg.root.has_value());
    CHECK(*cfg.root == 1);
    REQUIRE(cfg.middle_dim.has_value());
    CHECK(*cfg.middle_dim == 1);
}

TEST_CASE("bit targets convert through the exact dimension") {
    Config cfg = parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.8}]
      },
      "rates": {"p": 2, "n": 6, "bits": 0.5}
    })");
    CHECK(cfg.code_dims.at(0) == 3);
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.8}]
      },
      "rates": {"p": 3, "n": 6, "bits": 1.0}
    })"), NonIntegralRate);
}

TEST_CASE("unknown keys are rejected everywhere") {
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {"vertices": ["a"], "edges": [], "color": 1}
    })"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {"vertices": ["a"], "edges": []},
      "speed": "fast"
    })"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.5, "w": 2}]
      }
    })"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {"vertices": ["a"], "edges": []},
      "protocol": {"frobnicate": true}
    })"), ConfigError);
}

TEST_CASE("malformed structure is rejected") {
    CHECK_THROWS_AS(parse_config_text("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({"tree": {"vertices": []}})"), ConfigError);
    // duplicate vertex name
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {"vertices": ["a", "a"], "edges": []}
    })"), ConfigError);
    // edge endpoint that names no vertex
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "zz", "rho": 0.5}]
      }
    })"), ConfigError);
    // graph problems surface as config errors with the tree context
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b", "c"],
        "edges": [{"u": "a", "v": "b", "rho": 0.5}, {"u": "a", "v": "b", "rho": 0.4}]
      }
    })"), ConfigError);
}

TEST_CASE("numeric ranges are enforced") {
    auto with_protocol = [](const std::string& body) {
        return std::string(R"({
          "tree": {
            "vertices": ["a", "b"],
            "edges": [{"u": "a", "v": "b", "rho": 0.5}]
          },
          "protocol": )") + body + "}";
    };
    CHECK_THROWS_AS(parse_config_text(with_protocol(R"({"delta": 1.5})")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(with_protocol(R"({"delta": 0})")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(with_protocol(R"({"trials": 0})")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(with_protocol(R"({"threads": 1000})")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(with_protocol(R"({"root": "zz"})")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(with_protocol(R"({"extractor_floor": 0})")), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.5}]
      },
      "rates": {"p": 6, "n": 4, "k": 2}
    })"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.5}]
      },
      "rates": {"p": 5, "n": 4}
    })"), ConfigError);
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.5}]
      },
      "rates": {"p": 5, "n": 4, "k": 2, "bits": 1.0}
    })"), ConfigError);
    // per-vertex map must cover every vertex
    CHECK_THROWS_AS(parse_config_text(R"({
      "tree": {
        "vertices": ["a", "b"],
        "edges": [{"u": "a", "v": "b", "rho": 0.5}]
      },
      "rates": {"p": 5, "n": 4, "k": {"a": 2}}
    })"), ConfigError);
}

TEST_CASE("missing files surface cleanly") {
    CHECK_THROWS_AS(load_config("/nonexistent/path/cfg.json"), ConfigError);
}

TEST_SUITE_END();
