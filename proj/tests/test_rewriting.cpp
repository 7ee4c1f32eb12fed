#include <numeric>

#include <doctest.h>

#include "exrules/fixtures.hpp"
#include "exrules/rewriting.hpp"
#include "support.hpp"

using namespace exr;

namespace {

Rule one(const std::string& text) { return parse_rules(text).rules.at(0); }

bool equivalent(const std::vector<Rule>& a, const std::vector<Rule>& b, int n = 2) {
  return bounded_equivalence(a, b, n).equivalent;
}

Theory diverse_theory(const Signature& sig, const DiverseNormal& dn) {
  std::vector<F> fs;
  for (const auto& d : dn.deps) fs.push_back(diverse_to_formula(d));
  return make_theory(sig, dn.residuals, fs);
}

// Union-find over head atoms linked by shared existential variables.
std::vector<std::vector<int>> components_oracle(const std::vector<Atom>& atoms, const std::set<std::string>& ex) {
  std::vector<int> parent(atoms.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j)
      for (const auto& t : atoms[i].args)
        if (t.is_var() && ex.count(t.name) &&
            std::find(atoms[j].args.begin(), atoms[j].args.end(), t) != atoms[j].args.end())
          parent[find(static_cast<int>(j))] = find(static_cast<int>(i));
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < atoms.size(); ++i) groups[find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [k, g] : groups) out.push_back(g);
  std::sort(out.begin(), out.end());
  return out;
}

// The branch keeping every term distinct.
DiverseDependency widest(const Rule& r) {
  auto deps = normalize_diverse(r).deps;
  return *std::max_element(deps.begin(), deps.end(), [](const auto& a, const auto& b) {
    return a.una_terms.size() < b.una_terms.size();
  });
}

}  // namespace

TEST_CASE("split_ded and bounded entailment") {
  auto parts = split_ded(one("R() -> S() | T()"));
  REQUIRE(parts.size() == 2);
  CHECK(render_rule(parts[0]) == "R() -> S()");
  CHECK(render_rule(parts[1]) == "R() -> T()");
  CHECK(split_ded(one("P(x) -> Q(x)")).size() == 1);
  CHECK(split_ded(one("P(x) -> Q(x) | R(x) | S(x)")).size() == 3);
  CHECK_THROWS(split_ded(one("P(x) -> false")));

  // Models of each part are models of the rule.
  for (const char* text : {"R() -> S() | T()", "P(x) -> Q(x) | exists y. R(x,y)"}) {
    Rule r = one(text);
    for (const auto& part : split_ded(r)) {
      auto rep = bounded_equivalence(std::vector<Rule>{part}, std::vector<Rule>{part, r}, 2);
      CHECK(rep.equivalent);
    }
  }

  Budget b;
  auto trans = parse_rules("R(x,y), R(y,z) -> R(x,z)").rules;
  Entailment e = entails_bounded(trans, one("R(x,y) -> R(x,x)"), b);
  REQUIRE(e.refuted);
  CHECK(e.countermodel->size() == 2);
  CHECK(satisfies_rule(*e.countermodel, trans[0]));
  CHECK_FALSE(satisfies_rule(*e.countermodel, one("R(x,y) -> R(x,x)")));
  CHECK_FALSE(entails_bounded(trans, trans[0], b).refuted);
  CHECK_FALSE(entails_bounded(parse_rules("R() -> S()\nS() -> T()").rules, one("R() -> T()"), b).refuted);
}

TEST_CASE("ded to ed") {
  Budget b;
  Rewrite bad = ded_to_ed_bounded(parse_rules("R() -> S() | T()").rules, b);
  CHECK_FALSE(bad.ok());
  Rewrite same = ded_to_ed_bounded(parse_rules("R() -> S()").rules, b);
  CHECK(same.ok());
  CHECK(same.rules == parse_rules("R() -> S()").rules);
  // Product-closed at small sizes because the second disjunct is entailed.
  Rewrite ok = ded_to_ed_bounded(parse_rules("R() -> S() | T()\nR() -> S()").rules, b);
  CHECK(ok.ok());
}

TEST_CASE("equality elimination") {
  Rewrite r1 = eliminate_body_equalities(one("P(x), x = y -> Q(y)"));
  REQUIRE(r1.rules.size() == 1);
  CHECK(render_rule(r1.rules[0]) == "P(x) -> Q(x)");
  Rewrite r2 = eliminate_body_equalities(parse_rules("@const c d\nP(x), \"c\" = \"d\" -> Q(x)").rules[0]);
  CHECK(r2.rules.empty());
  CHECK(r2.residuals.size() == 1);

  Rewrite h1 = eliminate_head_equalities(one("P(x) -> exists y. R(x,y), y = x"));
  REQUIRE(h1.rules.size() == 1);
  CHECK(render_rule(h1.rules[0]) == "P(x) -> R(x,x)");
  Rewrite h2 = eliminate_head_equalities(one("R(x,y) -> x = y"));
  CHECK(h2.rules.empty());
  CHECK(h2.residuals.size() == 1);

  auto rng = exr::testing::make_rng(41);
  int tested = 0;
  for (int i = 0; i < 200; ++i) {
    std::string text = exr::testing::random_rule_text(rng, exr::testing::Shape::ED);
    Rule r = one(text);
    if (!has_equality(r)) continue;
    Rewrite b1 = eliminate_body_equalities(r);
    INFO(text);
    CHECK(equivalent({r}, b1.all()));
    for (const auto& x : b1.rules) CHECK(equivalent({x}, eliminate_head_equalities(x).all()));
    ++tested;
  }
  CHECK(tested > 20);
}

TEST_CASE("grounding checks") {
  CHECK_FALSE(has_trivial_model(parse_rules("P(x) -> false").rules));
  CHECK(has_trivial_model(parse_rules("P(x) -> Q(x)").rules));
  CHECK(has_sharp_model(parse_rules("P(x), R(x,y) -> Q(y)").rules));
  CHECK_FALSE(has_sharp_model(parse_rules("P(x), R(x,x) -> Q(y)").rules));
  CHECK_FALSE(gd_to_ded_decidable(parse_rules("P(x) -> false\nP(x) -> Q(x)").rules));
  CHECK(gd_to_ded_decidable(parse_rules("R() -> S() | T()").rules));

  auto rng = exr::testing::make_rng(42);
  for (int i = 0; i < 200; ++i) {
    Rule r = one(exr::testing::random_rule_text(rng, exr::testing::Shape::TGD));
    CHECK(has_sharp_model({r}));
    CHECK(has_trivial_model({r}));
  }
}

TEST_CASE("diverse normal form") {
  Rule succ = one("R(x,y) -> exists z. R(y,z)");
  DiverseNormal dn = normalize_diverse(succ);
  REQUIRE(dn.deps.size() == 2);
  CHECK(dn.residuals.empty());
  std::set<std::string> shown;
  for (const auto& d : dn.deps) shown.insert(render_diverse(d));
  CHECK(shown == std::set<std::string>{"una(x,y) :: R(x,y) -> exists z. R(y,z)", "una(x) :: R(x,x) -> exists z. R(x,z)"});

  DiverseNormal single = normalize_diverse(one("P(x) -> Q(x)"));
  REQUIRE(single.deps.size() == 1);
  CHECK(single.deps[0].base == one("P(x) -> Q(x)"));

  RuleSet withc = parse_rules("@const c d\nR(\"c\",\"d\") -> P(\"c\")");
  DiverseNormal dc = normalize_diverse(withc.rules[0]);
  CHECK(dc.deps.size() == 1);
  CHECK(dc.residuals.size() == 1);

  for (const auto& f : rule_corpus()) {
    RuleSet rs = parse_rules(f.text);
    for (const auto& r : rs.rules) {
      if (!classify(r).has(Flag::TGD)) continue;
      DiverseNormal n = normalize_diverse(r);
      INFO(f.name);
      CHECK(bounded_equivalence(make_theory(rs.sig, {r}), diverse_theory(rs.sig, n), 2).equivalent);
    }
  }
}

TEST_CASE("head graphs") {
  auto g1 = head_graph(one("P(x), Q(y) -> exists z,w. R(y,z), S(z,w)"));
  CHECK(g1.components.size() == 1);
  auto g2 = head_graph(one("P(y) -> exists z,w. R(y,z), S(y,w)"));
  CHECK(g2.components.size() == 2);

  auto rng = exr::testing::make_rng(43);
  for (int i = 0; i < 300; ++i) {
    Rule r = one(exr::testing::random_rule_text(rng, exr::testing::Shape::TGD));
    auto g = head_graph(r);
    const auto& h = r.heads.at(0);
    std::set<std::string> ex(h.exvars.begin(), h.exvars.end());
    auto comps = g.components;
    for (auto& c : comps) std::sort(c.begin(), c.end());
    std::sort(comps.begin(), comps.end());
    CHECK(g.vertices == h.atoms);
    CHECK(comps == components_oracle(h.atoms, ex));
  }

  Rule succ = one("R(x,y) -> exists z. R(y,z)");
  CHECK(is_quasi_frontier_guarded(widest(succ)));
  Rule shared = one("P(x), Q(y) -> exists z. R(x,z), R(y,z)");
  CHECK_FALSE(is_quasi_frontier_guarded(widest(shared)));
}

TEST_CASE("specializations and the derived rule sets") {
  DiverseDependency d = widest(one("R(x,y) -> exists z. R(y,z)"));
  auto S = specialization_set(d);
  auto has = [&](const Substitution& s) { return std::find(S.begin(), S.end(), s) != S.end(); };
  CHECK(has(Substitution{{"z", Term::var("z")}}));
  CHECK(has(Substitution{{"z", Term::var("x")}}));
  CHECK(has(Substitution{{"z", Term::var("y")}}));
  CHECK(delta_set(d, S).size() == S.size());
  for (const auto& s : S) CHECK(is_quasi_frontier_guarded(apply_substitution(d, s)));
  CHECK(specialization_set(d, 3).size() == 3);
  CHECK_THROWS_AS(specialization_set(d, 2), std::length_error);

  DiverseDependency ident = normalize_diverse(one("P(x) -> Q(x)")).deps[0];
  auto Si = specialization_set(ident);
  REQUIRE(Si.size() == 1);
  CHECK(Si[0].empty());  // no existentials
  CHECK(formula_equal(gamma_star(ident, Si), gamma_star(ident, Si)));

  // Non-QFG head: the identity drops out, groundings stay.
  DiverseDependency sw = widest(parse_rules("@const c\nP(x), Q(y), K(\"c\") -> exists z. S(x,z), T(y,z)").rules[0]);
  auto Ss = specialization_set(sw);
  REQUIRE(Ss.size() == 1);
  CHECK(Ss[0] == Substitution{{"z", Term::cst("c")}});
  CHECK(specialization_set(widest(one("P(x), Q(y) -> exists z. R(x,z), R(y,z)"))).empty());
}

TEST_CASE("quasi-frontier-guarded to frontier-guarded") {
  Rule split = one("P(x), Q(y) -> exists z,w. R(x,z), S(y,w)");
  auto out = qfg_to_frontier_guarded(split);
  CHECK(out.size() == 2);
  for (const auto& r : out) CHECK(classify(r).has(Flag::FrontierGuarded));
  CHECK(equivalent({split}, out));
  CHECK(qfg_to_frontier_guarded(one("R(x,y) -> exists z. R(y,z)")).size() == 1);
}

TEST_CASE("tgd to frontier-guarded pipeline") {
  Budget b;
  Rewrite fg = tgd_to_fgtgd_bounded(parse_rules("P(x), R(x,y) -> Q(y)").rules, b);
  CHECK(fg.ok());
  for (const auto& r : fg.rules) CHECK(classify(r).has(Flag::FrontierGuarded));

  Rewrite trans = tgd_to_fgtgd_bounded(parse_rules("R(x,y), R(y,z) -> R(x,z)").rules, b);
  CHECK_FALSE(trans.ok());

  auto two = parse_rules("E(x,y), E(y,z) -> C(y)").rules;
  Rewrite ts = tgd_to_fgtgd_bounded(two, b);
  CHECK(ts.ok());
  CHECK(equivalent(two, ts.all()));
  for (const auto& r : ts.rules) CHECK(classify(r).has(Flag::FrontierGuarded));

  std::string report = write_rewrite_report("FGTGD", parse_rules("E(x,y), E(y,z) -> C(y)"), ts);
  CHECK(report.find("# equivalence: verified") != std::string::npos);
  CHECK(parse_rules(report).rules.size() == 1 + ts.rules.size());
}
