#include <doctest.h>

#include "exrules/fixtures.hpp"
#include "exrules/preservation.hpp"
#include "support.hpp"

using namespace exr;

namespace {

std::vector<Rule> rules(const std::string& text) { return parse_rules(text).rules; }

Verdict run(const std::string& text, Property p, int max_domain = 2) {
  Budget b;
  b.max_domain = max_domain;
  return check_preservation(rules(text), p, b);
}

}  // namespace

TEST_CASE("worked counterexamples are found and replay") {
  Budget b;
  Theory psi = make_theory({}, {parse_prefix("(exists (x) (not (Q x)))")});
  Verdict v1 = check_preservation(psi, Property::GlobalHomPreimage, b);
  REQUIRE(v1.outcome == Outcome::Counterexample);
  CHECK(v1.certificate->structures.at("preimage").size() == 1);
  CHECK(v1.certificate->structures.at("model").size() == 2);
  CHECK(replay(v1, psi));

  b.max_domain = 1;
  Verdict v2 = check_preservation(rules("R() -> S() | T()"), Property::DirectProduct, b);
  REQUIRE(v2.outcome == Outcome::Counterexample);
  const Structure& prod = v2.certificate->structures.at("product");
  CHECK(prod.has("R", {}));
  CHECK_FALSE(prod.has("S", {}));
  CHECK_FALSE(prod.has("T", {}));
  CHECK(replay(v2, rules("R() -> S() | T()")));

  Verdict v3 = run("R(x,y), R(y,z) -> R(x,z)", Property::IsomorphicUnion);
  REQUIRE(v3.outcome == Outcome::Counterexample);
  CHECK(v3.certificate->structures.at("union").size() == 3);
  CHECK(v3.certificate->structures.at("union").fact_count() == 7);

  Verdict v4 = run("E(x,y), E(y,z) -> C(y)", Property::DisjointUnion);
  REQUIRE(v4.outcome == Outcome::Counterexample);
  CHECK(v4.certificate->structures.at("union").size() == 3);

  Verdict v5 = run("P(x), Q(x) -> R(x)", Property::Union, 1);
  REQUIRE(v5.outcome == Outcome::Counterexample);
  CHECK(v5.certificate->structures.at("union").size() == 1);

  CHECK(replay(v3, rules("R(x,y), R(y,z) -> R(x,z)")));
  CHECK(replay(v4, rules("E(x,y), E(y,z) -> C(y)")));
  CHECK(replay(v5, rules("P(x), Q(x) -> R(x)")));
}

TEST_CASE("certificates round trip and tampering is caught") {
  auto rs = rules("R(x,y), R(y,z) -> R(x,z)");
  Verdict v = run("R(x,y), R(y,z) -> R(x,z)", Property::IsomorphicUnion);
  REQUIRE(v.certificate);
  std::string text = write_certificate(*v.certificate);
  Certificate back = parse_certificate(text);
  CHECK(write_certificate(back) == text);
  CHECK(replay(back, make_theory(rs)));

  Certificate bad = back;
  bad.structures.at("union").add("R", {2, 3});  // repairs the violating chain
  std::string why;
  CHECK_FALSE(replay(bad, make_theory(rs), &why));
  CHECK_FALSE(why.empty());

  Certificate bad2 = back;
  bad2.maps.at("copy0").begin()->second = 2;
  CHECK_FALSE(replay(bad2, make_theory(rs)));

  for (Property p : all_properties()) CHECK(property_from_name(property_name(p)) == p);
}

TEST_CASE("linear rules and the empty set yield no counterexample") {
  CHECK(run("R(x,y) -> exists z. S(y,z)\nS(x,y) -> P(x)", Property::Union).outcome ==
        Outcome::NoCounterexampleWithinBudget);
  Budget b;
  for (const auto& [p, v] : property_matrix(std::vector<Rule>{}, b))
    CHECK(v.outcome == Outcome::NoCounterexampleWithinBudget);
}

TEST_CASE("guarded rule matrix") {
  Budget b;
  auto m = property_matrix(rules("P(x), R(x,y) -> Q(y)"), b);
  CHECK(m.at(Property::GlobalHomPreimage).outcome == Outcome::NoCounterexampleWithinBudget);
  CHECK(m.at(Property::DirectProduct).outcome == Outcome::NoCounterexampleWithinBudget);
  CHECK(m.at(Property::IsomorphicUnion).outcome == Outcome::NoCounterexampleWithinBudget);
  CHECK(m.at(Property::DisjointUnion).outcome == Outcome::NoCounterexampleWithinBudget);
  CHECK(m.at(Property::Union).outcome == Outcome::Counterexample);
  for (const auto& [p, v] : m)
    if (v.certificate) CHECK(replay(v, rules("P(x), R(x,y) -> Q(y)")));
}

TEST_CASE("monotone in the domain bound") {
  for (const char* text : {"R(x,y), R(y,z) -> R(x,z)", "E(x,y), E(y,z) -> C(y)", "P(x), Q(x) -> R(x)"})
    for (Property p : all_properties()) {
      Verdict lo = run(text, p, 1), hi = run(text, p, 2);
      if (lo.outcome == Outcome::Counterexample) {
        CHECK(hi.outcome == Outcome::Counterexample);
        CHECK(write_certificate(*lo.certificate) == write_certificate(*hi.certificate));
      }
    }
}

TEST_CASE("random mode is reproducible and sound") {
  auto rng = exr::testing::make_rng(31);
  for (int i = 0; i < 30; ++i) {
    auto rs = rules(exr::testing::random_rule_text(rng, static_cast<exr::testing::Shape>(i % 3)));
    Budget b;
    b.mode = Mode::Random;
    b.seed = 1000 + i;
    b.max_pairs = 300;
    for (Property p : all_properties()) {
      Verdict v1 = check_preservation(rs, p, b), v2 = check_preservation(rs, p, b);
      CHECK(v1.outcome == v2.outcome);
      if (v1.certificate) {
        CHECK(write_certificate(*v1.certificate) == write_certificate(*v2.certificate));
        CHECK(replay(v1, rs));
      }
    }
  }
}

TEST_CASE("every exhaustive counterexample replays") {
  auto rng = exr::testing::make_rng(32);
  int found = 0;
  for (int i = 0; i < 60; ++i) {
    auto rs = rules(exr::testing::random_rule_text(rng, static_cast<exr::testing::Shape>(i % 3)));
    Budget b;
    b.max_domain = 2;
    for (Property p : all_properties()) {
      Verdict v = check_preservation(rs, p, b);
      if (!v.certificate) continue;
      ++found;
      std::string why;
      INFO(render_rule(rs[0]), " ", property_name(p));
      CHECK(replay(v, rs, &why));
      CHECK(replay(parse_certificate(write_certificate(*v.certificate)), make_theory(rs)));
    }
  }
  CHECK(found > 0);
}

TEST_CASE("embedded fixtures pass") {
  for (const auto& f : fixtures()) {
    FixtureResult r = run_fixture(f);
    INFO(f.name, ": ", r.detail);
    CHECK(r.pass);
  }
}
