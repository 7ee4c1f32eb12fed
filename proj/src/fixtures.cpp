#include "exrules/fixtures.hpp"

#include <chrono>
#include <stdexcept>

#include "exrules/rewriting.hpp"

namespace exr {

const char* const kHardnessProduct =
    "Start(x) -> Next(x) | Q()\n"
    "Goal(x) -> Q()\n"
    "R() -> P() | Q()\n";

const char* const kHardnessDisjointUnion =
    "Start(x) -> Next(x)\n"
    "Goal(x) -> Q()\n"
    "Q(), E(x,y) -> C(y)\n"
    "Q(), E(y,z) -> C(y)\n"
    "E(x,y), E(y,z) -> C(y)\n";

const char* const kHardnessUnion =
    "Start(x) -> Next(x)\n"
    "Goal(x) -> Q()\n"
    "Q(), R(x) -> T(x)\n"
    "Q(), S(x) -> T(x)\n"
    "R(x), S(x) -> T(x)\n";

const std::vector<RuleFixture>& rule_corpus() {
  static const std::vector<RuleFixture> v = {
      {"transitivity", "R(x,y), R(y,z) -> R(x,z)\n"},
      {"two-step-centre", "E(x,y), E(y,z) -> C(y)\n"},
      {"guarded-conjunction", "P(x), Q(x) -> R(x)\n"},
      {"nullary-disjunction", "R() -> S() | T()\n"},
      {"sharp-ded", "P(x), R(x,y) -> Q(y)\n"},
      {"successor", "R(x,y) -> exists z. R(y,z)\n"},
      {"linear-chain", "A(x) -> exists y. B(x,y)\nB(x,y) -> A(y)\n"},
      {"split-components", "P(x), Q(y) -> exists z,w. R(x,z), S(y,w)\n"},
      {"shared-witness", "P(x), Q(y) -> exists z. R(x,z), R(y,z)\n"},
      {"constants", "@const c d\nP(x), R(x,\"c\") -> exists y. R(y,\"d\")\n"},
      {"hardness-product", kHardnessProduct},
      {"hardness-disjoint-union", kHardnessDisjointUnion},
      {"hardness-union", kHardnessUnion},
  };
  return v;
}

const RuleFixture& rule_fixture(const std::string& name) {
  for (const auto& f : rule_corpus())
    if (f.name == name) return f;
  throw std::out_of_range("unknown rule fixture: " + name);
}

Theory linear_order_theory() {
  const char* text =
      "(forall (x) (not (Less x x)))\n"
      "(forall (x y z) (implies (and (Less x y) (Less y z)) (Less x z)))\n"
      "(forall (x y) (or (= x y) (Less x y) (Less y x)))\n"
      "(forall (x y) (implies (Min x) (or (= x y) (Less x y))))\n"
      "(exists (v) (Min v))\n"
      "(forall (x y) (implies (Max x) (or (= x y) (Less y x))))\n"
      "(exists (v) (Max v))\n"
      "(forall (x y) (implies (Succ x y) (Less x y)))\n"
      "(forall (x y z) (implies (and (Succ x y) (Less x z)) (or (= y z) (Less y z))))\n"
      "(implies (forall (x) (or (Max x) (exists (y) (Succ x y)))) (exists (x) (not (Q x))))\n";
  auto fs = parse_prefix_all(text);
  Signature sig;
  for (const auto& f : fs) sig.merge(formula_signature(f));
  return make_theory(sig, {}, fs);
}

namespace {

FixtureResult fail(const std::string& why) { return {false, why, 0}; }
FixtureResult ok(const std::string& what) { return {true, what, 0}; }

Structure expect(const Signature& sig, const std::string& text) { return parse_structure(text, &sig).s; }

Theory rules_theory(const std::string& text) {
  auto rs = parse_rules(text);
  return make_theory(rs.sig, rs.rules);
}

// Certificate structure check against an expected structure.
bool same(const Certificate& c, const std::string& role, const Structure& s) {
  auto it = c.structures.find(role);
  return it != c.structures.end() && it->second == s;
}

FixtureResult counterexample(const Theory& t, Property p, const Budget& b, Certificate& out) {
  Verdict v = check_preservation(t, p, b);
  if (v.outcome != Outcome::Counterexample) return fail("no counterexample within budget");
  std::string why;
  if (!replay(v, t, &why)) return fail("certificate does not replay: " + why);
  out = *v.certificate;
  return ok("");
}

FixtureResult ghom_example() {
  Signature sig;
  sig.add_relation("Q", 1);
  Theory t = make_theory(sig, {}, {parse_prefix("(exists (x) (not (Q x)))")});
  Certificate c;
  auto r = counterexample(t, Property::GlobalHomPreimage, Budget{}, c);
  if (!r.pass) return r;
  if (!same(c, "model", expect(sig, "domain: 1 2\nQ(1)")) || !same(c, "preimage", expect(sig, "domain: 1\nQ(1)")))
    return fail("counterexample differs from A = ({a,b}, Q={a}), B = A|{a}");
  return ok("B = A|{a} with Q = {a} is globally homomorphic to A = ({a,b}, Q = {a})");
}

FixtureResult product_example() {
  Theory t = rules_theory(rule_fixture("nullary-disjunction").text);
  Budget b;
  b.max_domain = 1;
  Certificate c;
  auto r = counterexample(t, Property::DirectProduct, b, c);
  if (!r.pass) return r;
  const Structure& p = c.structures.at("product");
  if (!p.has("R", {}) || p.has("S", {}) || p.has("T", {})) return fail("product is not R only");
  const Structure &a = c.structures.at("A"), &bb = c.structures.at("B");
  bool split = (a.has("S", {}) != bb.has("S", {})) && (a.has("T", {}) != bb.has("T", {}));
  if (!split) return fail("factors do not split S and T");
  return ok("factors (R,T) and (R,S) multiply to R alone");
}

FixtureResult sharp_example() {
  auto rs = parse_rules("P(x), R(x,y) -> Q(y)\n");
  auto rs0 = parse_rules("P(x), R(x,x) -> Q(y)\n");
  Structure a = expect(rs.sig, "domain: 1 2\nP(1)\nQ(1)\nR(1,1)");
  if (!satisfies_rule(a, rs.rules[0])) return fail("the two-element structure is not a model of the DED");
  if (satisfies_rule(a, rs0.rules[0])) return fail("the unsafe GD holds in the two-element structure");
  if (!isomorphic(a, sharp_structure(rs.sig))) return fail("the two-element structure is not sharp");
  if (!has_sharp_model(rs.rules) || has_sharp_model(rs0.rules)) return fail("grounding check disagrees");
  if (gd_to_ded_decidable(rs0.rules)) return fail("unsafe GD reported as DED-expressible");
  return ok("sharp model separates the DED from its unsafe variant");
}

FixtureResult iso_union_example() {
  Theory t = rules_theory(rule_fixture("transitivity").text);
  Certificate c;
  auto r = counterexample(t, Property::IsomorphicUnion, Budget{}, c);
  if (!r.pass) return r;
  if (c.family != std::vector<ElemSet>{{1}, {1, 2}}) return fail("family is not {{a},{a,b}}");
  Structure u = expect(t.sig, "domain: 1 2 3\nR(1,1)\nR(1,2)\nR(2,1)\nR(2,2)\nR(1,3)\nR(3,1)\nR(3,3)");
  if (!same(c, "union", u)) return fail("union is not {a,b}^2 u {a,b'}^2");
  const auto& asg = c.violation.asg;
  if (asg.at("x") != 2 || asg.at("y") != 1 || asg.at("z") != 3) return fail("violation is not the chain b,a,b'");
  return ok("G = {{a},{a,b}}, union {a,b}^2 u {a,b'}^2, chain b -> a -> b'");
}

FixtureResult disjoint_union_example() {
  Theory t = rules_theory(rule_fixture("two-step-centre").text);
  Certificate c;
  auto r = counterexample(t, Property::DisjointUnion, Budget{}, c);
  if (!r.pass) return r;
  if (!same(c, "A", expect(t.sig, "domain: 1 2\nE(1,2)")) || !same(c, "B", expect(t.sig, "domain: 2 3\nE(2,3)")))
    return fail("pair differs from E^A = {(a,b)}, E^B = {(b,c)}");
  return ok("E^A = {(a,b)}, E^B = {(b,c)} overlapping in {b}");
}

FixtureResult union_example() {
  Theory t = rules_theory(rule_fixture("guarded-conjunction").text);
  Certificate c;
  auto r = counterexample(t, Property::Union, Budget{}, c);
  if (!r.pass) return r;
  if (!same(c, "A", expect(t.sig, "domain: 1\nQ(1)")) || !same(c, "B", expect(t.sig, "domain: 1\nP(1)")))
    return fail("pair differs from Q^A = {a}, P^B = {a}");
  return ok("Q^A = {a} and P^B = {a} on one element");
}

FixtureResult linear_order_example() {
  Theory t = linear_order_theory();
  Budget b;
  b.max_domain = 3;
  Verdict v = check_preservation(t, Property::GlobalHomPreimage, b);
  if (v.outcome != Outcome::NoCounterexampleWithinBudget) return fail("unexpected counterexample");
  if (v.stats.budget_exhausted) return fail("budget exhausted");
  return ok("no counterexample up to size 3 (" + std::to_string(v.stats.structures) + " models)");
}

// Explicit countermodels: both expansions are models and the construction is not.
FixtureResult explicit_pair(const Theory& t, Property p, const Structure& a, const Structure& b) {
  Certificate c;
  c.property = p;
  c.structures["A"] = a;
  c.structures["B"] = b;
  Structure built = p == Property::DirectProduct ? direct_product(a, b) : structure_union(a, b);
  auto viol = theory_violation(built, t);
  if (!viol) return fail("construction of the explicit countermodels is a model");
  c.structures[failing_role(p)] = built;
  c.violation = *viol;
  std::string why;
  if (!replay(c, t, &why)) return fail("explicit countermodels do not replay: " + why);
  return ok("");
}

FixtureResult hardness_product() {
  Theory t = rules_theory(kHardnessProduct);
  auto r = explicit_pair(t, Property::DirectProduct, expect(t.sig, "domain: 1\nR()\nP()"),
                         expect(t.sig, "domain: 1\nR()\nQ()"));
  if (!r.pass) return r;
  Budget b;
  b.max_domain = 1;
  Certificate c;
  r = counterexample(t, Property::DirectProduct, b, c);
  if (!r.pass) return r;
  return ok("expansions (R,P) and (R,Q) are models, their product is not; search agrees at size 1");
}

FixtureResult hardness_disjoint_union() {
  Theory t = rules_theory(kHardnessDisjointUnion);
  // Copies of a three-element countermodel sharing b = 2: a' = 1, c' = 5.
  auto r = explicit_pair(t, Property::DisjointUnion, expect(t.sig, "domain: 1 2 3\nE(1,2)"),
                         expect(t.sig, "domain: 2 4 5\nE(2,5)"));
  if (!r.pass) return r;
  Budget b;
  b.max_domain = 3;
  Certificate c;
  r = counterexample(t, Property::DisjointUnion, b, c);
  if (!r.pass) return r;
  return ok("copies with E = {(a',b)} and E = {(b,c')} are models, their union is not; search agrees");
}

FixtureResult hardness_union() {
  Theory t = rules_theory(kHardnessUnion);
  auto r = explicit_pair(t, Property::Union, expect(t.sig, "domain: 1\nR(1)"), expect(t.sig, "domain: 1\nS(1)"));
  if (!r.pass) return r;
  Budget b;
  b.max_domain = 1;
  Certificate c;
  r = counterexample(t, Property::Union, b, c);
  if (!r.pass) return r;
  return ok("expansions with R = {a} and S = {a} are models, their union is not; search agrees at size 1");
}

}  // namespace

const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> v = {
      {"ghom-exists-not-q", "globally-homomorphic preimage", ghom_example},
      {"product-nullary-disjunction", "direct product of a nullary disjunction", product_example},
      {"sharp-model-ded", "sharp model example", sharp_example},
      {"iso-union-transitivity", "isomorphic union of transitivity", iso_union_example},
      {"disjoint-union-two-step", "disjoint union, two-step centre", disjoint_union_example},
      {"union-guarded-conjunction", "guarded vs linear example", union_example},
      {"linear-order-ghom", "linear-order sentence", linear_order_example},
      {"hardness-product", "direct product hardness construction", hardness_product},
      {"hardness-disjoint-union", "disjoint union hardness construction", hardness_disjoint_union},
      {"hardness-union", "union hardness construction", hardness_union},
  };
  return v;
}

FixtureResult run_fixture(const Fixture& f) {
  auto t0 = std::chrono::steady_clock::now();
  FixtureResult r;
  try {
    r = f.run();
  } catch (const std::exception& e) {
    r = fail(std::string("exception: ") + e.what());
  }
  r.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace exr
