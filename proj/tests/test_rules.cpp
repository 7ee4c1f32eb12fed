#include <doctest.h>

#include "exrules/rewriting.hpp"
#include "support.hpp"

using namespace exr;
using exr::testing::Shape;

namespace {

Rule one(const std::string& text) { return parse_rules(text).rules.at(0); }

bool flags_are(const Rule& r, std::initializer_list<Flag> on, std::initializer_list<Flag> off) {
  RuleClass c = classify(r);
  for (Flag f : on)
    if (!c.has(f)) return false;
  for (Flag f : off)
    if (c.has(f)) return false;
  return true;
}

}  // namespace

TEST_CASE("classify the worked examples") {
  CHECK(flags_are(one("P(x), R(x,y) -> Q(y)"), {Flag::TGD, Flag::FrontierGuarded, Flag::Guarded}, {Flag::Linear}));
  CHECK(flags_are(one("R(x,y), R(y,z) -> R(x,z)"), {Flag::TGD}, {Flag::FrontierGuarded}));
  CHECK(flags_are(one("E(x,y), E(y,z) -> C(y)"), {Flag::FrontierGuarded}, {Flag::Guarded}));
  CHECK(flags_are(one("P(x), Q(x) -> R(x)"), {Flag::Guarded}, {Flag::Linear}));
  CHECK(flags_are(one("R() -> S() | T()"), {Flag::DED}, {Flag::ED}));
  CHECK(flags_are(one("P(x) -> false"), {Flag::GD, Flag::NegativeConstraint, Flag::Safe}, {Flag::DED}));
  CHECK(flags_are(one("P(x), R(x,x) -> Q(y)"), {Flag::GD}, {Flag::Safe}));
  CHECK(flags_are(one("R(x,y) -> exists z. R(y,z)"), {Flag::Linear, Flag::Guarded}, {}));
  CHECK(flags_are(one("P(x), R(x,y), x = y -> Q(y)"), {Flag::ED}, {Flag::TGD}));
  CHECK(flags_are(one("P(x), x = y -> Q(y)"), {Flag::GD}, {Flag::Safe}));
}

TEST_CASE("frontier variables") {
  auto fv = frontier_variables(one("E(x,y), E(y,z) -> C(y)"));
  CHECK(fv == std::set<Term>{Term::var("y")});
  CHECK(frontier_variables(one("P(x) -> exists y. R(y,y)")).empty());
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_rules("P(x) -> Q(x)\nP(x), -> Q(x)\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  CHECK_THROWS_AS(parse_rules("R(x) -> R(x,y)\n"), ParseError);
  CHECK_THROWS_AS(parse_rules("P(x) -> Q(x), false\n"), ParseError);
  CHECK(parse_rules("").rules.empty());
  CHECK(parse_rules("# only a comment\n").rules.empty());
}

TEST_CASE("random rules: hierarchy, round trip, frontier inside universals") {
  auto rng = exr::testing::make_rng(11);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Shape shape = static_cast<Shape>(i % 3);
    std::string text = exr::testing::random_rule_text(rng, shape);
    RuleSet rs = parse_rules(text);
    REQUIRE(rs.rules.size() == 1);
    const Rule& r = rs.rules[0];
    RuleClass c = classify(r);
    INFO(text);
    CHECK(c.has(Flag::GD));
    if (c.has(Flag::Linear)) CHECK(c.has(Flag::Guarded));
    if (c.has(Flag::Guarded)) CHECK(c.has(Flag::FrontierGuarded));
    if (c.has(Flag::FrontierGuarded)) CHECK(c.has(Flag::TGD));
    if (c.has(Flag::TGD)) CHECK(c.has(Flag::ED));
    if (c.has(Flag::ED)) CHECK(c.has(Flag::DED));
    if (c.has(Flag::DED)) CHECK(c.has(Flag::Safe));
    if (shape != Shape::GD) CHECK(c.has(Flag::ED));
    if (shape == Shape::TGD) CHECK(c.has(Flag::TGD));

    RuleSet again = parse_rules(render_rules(rs));
    CHECK(again.rules == rs.rules);
    CHECK(again.sig == rs.sig);

    auto u = universal_vars(r);
    for (const auto& t : frontier_variables(r)) CHECK(u.count(t.name) == 1);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("rule-level quasi-frontier-guardedness matches the head graph") {
  auto rng = exr::testing::make_rng(12);
  for (int i = 0; i < 500; ++i) {
    std::string text = exr::testing::random_rule_text(rng, Shape::TGD);
    Rule r = one(text);
    auto g = head_graph(r);
    auto u = universal_vars(r);
    bool expected = true;
    for (const auto& comp : g.components) {
      std::set<std::string> need;
      for (int v : comp)
        for (const auto& t : g.vertices[v].args)
          if (t.is_var() && u.count(t.name)) need.insert(t.name);
      bool guarded = need.empty();
      for (const auto& b : r.body) {
        if (!b.is_rel()) continue;
        std::set<std::string> have;
        for (const auto& t : b.args)
          if (t.is_var()) have.insert(t.name);
        if (std::includes(have.begin(), have.end(), need.begin(), need.end())) guarded = true;
      }
      expected = expected && guarded;
    }
    INFO(text);
    CHECK(rule_is_quasi_frontier_guarded(r) == expected);
  }
}
