#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "spear/spear.hpp"

using namespace spear;

TEST_CASE("builtin claims schema has the documented label sets") {
  SchemaDef s = builtin_schema("scientific-claims");
  CHECK(s.entity_types ==
        std::vector<std::string>{"factor", "association", "magnitude", "evidence", "epistemic",
                                 "qualifier"});
  CHECK(s.attribute_types ==
        std::vector<std::string>{"causation", "comparison", "indicates", "increases", "decreases",
                                 "correlation", "test"});
  CHECK(s.relation_types ==
        std::vector<std::string>{"arg0", "arg1", "comp_to", "modifier", "q+", "q-", "subtype"});
  CHECK_FALSE(s.open);
  for (const auto& attr : s.attribute_types) {
    REQUIRE(s.attribute_scope.contains(attr));
    CHECK(s.attribute_scope.at(attr) == std::set<std::string>{"association"});
  }
  CHECK(schema_problems(s).empty());
}

TEST_CASE("builtin ethnographic schema is open and carries its label families") {
  SchemaDef s = builtin_schema("ethnographic");
  CHECK(s.open);
  for (const auto& label : {"spirituality", "action/event", "influence"})
    CHECK(s.attribute_index(label) >= 0);
  for (const auto& label :
       {"agent/poss", "t+", "forPurpose", "hasFunction", "arg0", "arg1", "modifier", "q+", "q-"})
    CHECK(s.relation_index(label) >= 0);
  CHECK(schema_problems(s).empty());
}

TEST_CASE("unknown builtin schema name is rejected") {
  CHECK_THROWS_AS(builtin_schema("nope"), NotFoundError);
}

TEST_CASE("schema_problems flags empty and overlapping label sets") {
  SchemaDef s;
  s.entity_types = {"a"};
  s.attribute_types = {"a"};  // overlaps entity set
  s.relation_types = {};      // empty
  auto problems = schema_problems(s);
  CHECK(problems.size() >= 2);
}

TEST_CASE("schema_problems checks attribute_scope referential integrity") {
  SchemaDef s;
  s.entity_types = {"e"};
  s.attribute_types = {"a"};
  s.relation_types = {"r"};
  s.attribute_scope["bogus"] = {"e"};
  CHECK_FALSE(schema_problems(s).empty());
  s.attribute_scope.clear();
  s.attribute_scope["a"] = {"not-an-entity"};
  CHECK_FALSE(schema_problems(s).empty());
}

static KnowledgeGraph tiny_graph() {
  KnowledgeGraph g;
  g.tokens = {"a", "b", "c", "d"};
  g.entities = {{0, 0, "factor"}, {1, 2, "association"}};
  g.attributes = {{1, "causation"}};
  g.relations = {{1, 0, "arg0"}};
  return g;
}

TEST_CASE("valid graph yields an empty report") {
  auto report = validate_graph(tiny_graph(), builtin_schema("scientific-claims"));
  CHECK(report.ok());
  CHECK(report.violations.empty());
}

TEST_CASE("empty graph is vacuously valid") {
  KnowledgeGraph g;
  CHECK(validate_graph(g, builtin_schema("scientific-claims")).ok());
}

TEST_CASE("structural violations are each reported") {
  SchemaDef schema = builtin_schema("scientific-claims");

  SECTION("span out of range") {
    auto g = tiny_graph();
    g.entities.push_back({3, 9, "factor"});
    auto r = validate_graph(g, schema);
    CHECK_FALSE(r.ok());
  }
  SECTION("inverted span") {
    auto g = tiny_graph();
    g.entities.push_back({3, 2, "factor"});
    CHECK_FALSE(validate_graph(g, schema).ok());
  }
  SECTION("duplicate span, even with different types") {
    auto g = tiny_graph();
    g.entities.push_back({0, 0, "qualifier"});
    auto r = validate_graph(g, schema);
    CHECK_FALSE(r.ok());
    bool mentions_duplicate = std::any_of(r.violations.begin(), r.violations.end(),
                                          [](const Violation& v) {
                                            return v.rule.find("duplicate") != std::string::npos;
                                          });
    CHECK(mentions_duplicate);
  }
  SECTION("attribute referencing a missing entity") {
    auto g = tiny_graph();
    g.attributes.push_back({7, "causation"});
    CHECK_FALSE(validate_graph(g, schema).ok());
  }
  SECTION("duplicate attribute") {
    auto g = tiny_graph();
    g.attributes.push_back({1, "causation"});
    CHECK_FALSE(validate_graph(g, schema).ok());
  }
  SECTION("relation referencing a missing entity") {
    auto g = tiny_graph();
    g.relations.push_back({0, 9, "arg1"});
    CHECK_FALSE(validate_graph(g, schema).ok());
  }
  SECTION("self-cycle") {
    auto g = tiny_graph();
    g.relations.push_back({0, 0, "arg1"});
    auto r = validate_graph(g, schema);
    CHECK_FALSE(r.ok());
    bool mentions_self = std::any_of(r.violations.begin(), r.violations.end(),
                                     [](const Violation& v) {
                                       return v.rule.find("self") != std::string::npos;
                                     });
    CHECK(mentions_self);
  }
  SECTION("duplicate relation edge (same pair and type)") {
    auto g = tiny_graph();
    g.relations.push_back({1, 0, "arg0"});
    CHECK_FALSE(validate_graph(g, schema).ok());
  }
  SECTION("parallel edges with distinct types are fine") {
    auto g = tiny_graph();
    g.relations.push_back({1, 0, "modifier"});
    CHECK(validate_graph(g, schema).ok());
  }
  SECTION("overlapping but non-identical spans are fine") {
    auto g = tiny_graph();
    g.entities.push_back({0, 1, "qualifier"});
    CHECK(validate_graph(g, schema).ok());
  }
}

TEST_CASE("vocabulary violations depend on the open flag") {
  auto g = tiny_graph();
  g.entities[0].type = "made-up";

  auto closed = builtin_schema("scientific-claims");
  CHECK_FALSE(validate_graph(g, closed).ok());

  auto open = builtin_schema("ethnographic");
  CHECK(validate_graph(g, open).ok());
}

TEST_CASE("attribute scope violations are warnings, not errors") {
  auto g = tiny_graph();
  g.attributes.push_back({0, "test"});  // "test" is scoped to association; entity 0 is a factor
  auto r = validate_graph(g, builtin_schema("scientific-claims"));
  CHECK(r.ok());
  CHECK(r.warning_count() >= 1);
}

TEST_CASE("validation is order-independent") {
  Rng rng(99);
  for (int i = 0; i < 30; ++i) {
    auto g = helpers::random_graph(rng);
    g.relations.push_back({0, 0, "arg0"});  // guarantee at least one violation
    auto base = validate_graph(g, builtin_schema("scientific-claims"));

    KnowledgeGraph shuffled = g;
    rng.shuffle(shuffled.relations);
    rng.shuffle(shuffled.attributes);
    auto again = validate_graph(shuffled, builtin_schema("scientific-claims"));

    std::multiset<std::string> a, b;
    for (const auto& v : base.violations) a.insert(v.rule);
    for (const auto& v : again.violations) b.insert(v.rule);
    REQUIRE(a == b);
  }
}

TEST_CASE("canonicalized sorts entities and remaps references") {
  KnowledgeGraph g;
  g.tokens = {"a", "b", "c"};
  g.entities = {{2, 2, "factor"}, {0, 0, "factor"}};
  g.attributes = {{0, "causation"}};  // on the (2,2) entity
  g.relations = {{0, 1, "arg0"}};     // (2,2) -> (0,0)

  auto c = canonicalized(g);
  REQUIRE(c.entities.size() == 2);
  CHECK(c.entities[0].start == 0);
  CHECK(c.entities[1].start == 2);
  REQUIRE(c.attributes.size() == 1);
  CHECK(c.attributes[0].entity == 1);
  REQUIRE(c.relations.size() == 1);
  CHECK(c.relations[0].head == 1);
  CHECK(c.relations[0].tail == 0);
}

TEST_CASE("graph equality ignores element order") {
  auto g = tiny_graph();
  KnowledgeGraph h = g;
  std::reverse(h.entities.begin(), h.entities.end());
  // references must be remapped to keep the same meaning
  h.attributes = {{0, "causation"}};
  h.relations = {{0, 1, "arg0"}};
  CHECK(g == h);

  h.relations[0].type = "arg1";
  CHECK_FALSE(g == h);
}

TEST_CASE("knowledge graph JSON round-trips") {
  auto g = tiny_graph();
  nlohmann::json j = g;
  auto back = j.get<KnowledgeGraph>();
  CHECK(g == back);

  // attributes are grouped per entity with a "types" array
  REQUIRE(j["attributes"].size() == 1);
  CHECK(j["attributes"][0]["types"].is_array());
}

TEST_CASE("random graphs survive a JSON round-trip") {
  Rng rng(4242);
  for (int i = 0; i < 50; ++i) {
    auto g = helpers::random_graph(rng);
    nlohmann::json j = g;
    CHECK(j.get<KnowledgeGraph>() == g);
  }
}

TEST_CASE("graph JSON parsing rejects malformed input") {
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"entities": []})").get<KnowledgeGraph>(),
                  ValidationError);
  CHECK_THROWS_AS(
      nlohmann::json::parse(R"({"tokens": ["a"], "entities": [{"start": 0}]})")
          .get<KnowledgeGraph>(),
      ValidationError);
  CHECK_THROWS_AS(
      nlohmann::json::parse(
          R"({"tokens": ["a"], "entities": [], "relations": [{"head": 0, "tail": 1, "type": "x"}]})")
          .get<KnowledgeGraph>(),
      ValidationError);
}

TEST_CASE("schema JSON round-trips and fingerprints are content-sensitive") {
  SchemaDef s = builtin_schema("scientific-claims");
  nlohmann::json j = s;
  SchemaDef back = j.get<SchemaDef>();
  CHECK(back.entity_types == s.entity_types);
  CHECK(back.attribute_scope == s.attribute_scope);
  CHECK(schema_fingerprint(back) == schema_fingerprint(s));

  SchemaDef other = builtin_schema("ethnographic");
  CHECK(schema_fingerprint(other) != schema_fingerprint(s));

  SchemaDef tweaked = s;
  tweaked.entity_types.push_back("extra");
  CHECK(schema_fingerprint(tweaked) != schema_fingerprint(s));
}
