#include <functional>
#include <utility>

#include <doctest.h>

#include "exrules/semantics.hpp"
#include "support.hpp"

using namespace exr;

namespace {

Structure parse(const std::string& text) { return parse_structure(text).s; }

// Second evaluator: environment as a binding stack, innermost binding last.
using Env = std::vector<std::pair<std::string, Elem>>;

Elem naive_term(const Structure& s, const Term& t, const Env& env) {
  if (t.is_const()) return s.cst.at(t.name);
  for (auto it = env.rbegin(); it != env.rend(); ++it)
    if (it->first == t.name) return it->second;
  throw std::logic_error("unbound");
}

bool naive(const Structure& s, const F& f, Env& env) {
  using K = Formula::Kind;
  switch (f->kind) {
    case K::True: return true;
    case K::False: return false;
    case K::Atom: {
      Tuple t;
      for (const auto& a : f->args) t.push_back(naive_term(s, a, env));
      return s.has(f->rel, t);
    }
    case K::Eq: return naive_term(s, f->args[0], env) == naive_term(s, f->args[1], env);
    case K::Not: return !naive(s, f->kids[0], env);
    case K::And: {
      bool r = true;
      for (const auto& k : f->kids) r = naive(s, k, env) && r;
      return r;
    }
    case K::Or: {
      bool r = false;
      for (const auto& k : f->kids) r = naive(s, k, env) || r;
      return r;
    }
    case K::Implies: return !naive(s, f->kids[0], env) || naive(s, f->kids[1], env);
    case K::Exists:
    case K::Forall: {
      // Expand one variable at a time into a nested quantifier.
      bool ex = f->kind == K::Exists;
      std::vector<std::string> rest(f->vars.begin() + 1, f->vars.end());
      F inner = rest.empty() ? f->kids[0] : (ex ? fo::exists(rest, f->kids[0]) : fo::forall(rest, f->kids[0]));
      int hits = 0;
      for (Elem e : s.domain) {
        env.push_back({f->vars[0], e});
        hits += naive(s, inner, env) ? 1 : 0;
        env.pop_back();
      }
      return ex ? hits > 0 : hits == static_cast<int>(s.domain.size());
    }
  }
  return false;
}

bool naive(const Structure& s, const F& f) {
  Env env;
  return naive(s, f, env);
}

// All maps dom(a) -> dom(b), checked straight from the definition.
std::vector<std::map<Elem, Elem>> all_maps(const Structure& a, const Structure& b) {
  std::vector<std::map<Elem, Elem>> out;
  std::map<Elem, Elem> m;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == a.size()) {
      out.push_back(m);
      return;
    }
    for (Elem e : b.domain) {
      m[a.domain[i]] = e;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

bool brute_hom(const Structure& a, const Structure& b, const std::map<Elem, Elem>& h) {
  for (const auto& [c, e] : a.cst)
    if (h.at(e) != b.cst.at(c)) return false;
  for (const auto& [r, ts] : a.rel)
    for (const auto& t : ts) {
      Tuple u;
      for (Elem e : t) u.push_back(h.at(e));
      if (!b.has(r, u)) return false;
    }
  return true;
}

bool brute_exists_hom(const Structure& a, const Structure& b) {
  for (const auto& m : all_maps(a, b))
    if (brute_hom(a, b, m)) return true;
  return false;
}

// (a, ta) and (b, tb) map into each other with the pins respected.
bool brute_mutual(const Structure& a, const Tuple& ta, const Structure& b, const Tuple& tb) {
  auto pinned = [](const Structure& x, const Tuple& tx, const Structure& y, const Tuple& ty) {
    for (const auto& m : all_maps(x, y)) {
      bool ok = brute_hom(x, y, m);
      for (std::size_t i = 0; ok && i < tx.size(); ++i) ok = m.at(tx[i]) == ty[i];
      if (ok) return true;
    }
    return false;
  };
  return pinned(a, ta, b, tb) && pinned(b, tb, a, ta);
}

std::vector<Tuple> tuples_upto(const std::vector<Elem>& dom, int len) {
  std::vector<Tuple> out;
  for (int k = 0; k <= len; ++k) {
    auto ts = all_tuples(dom, k);
    out.insert(out.end(), ts.begin(), ts.end());
  }
  return out;
}

// Definition with repeats allowed, tuple length up to max_len.
bool brute_global(const Structure& a, const Structure& b, int max_len) {
  for (const auto& ta : tuples_upto(a.domain, max_len)) {
    bool found = false;
    for (const auto& tb : all_tuples(b.domain, static_cast<int>(ta.size())))
      if (brute_mutual(a, ta, b, tb)) {
        found = true;
        break;
      }
    if (!found) return false;
  }
  return true;
}

Signature small_sig() {
  Signature s;
  s.add_relation("P", 1);
  s.add_relation("R", 2);
  s.add_constant("c");
  return s;
}

}  // namespace

TEST_CASE("eval on the worked example") {
  F psi = parse_prefix("(exists (x) (not (Q x)))");
  Structure a = parse("@rel Q/1\ndomain: a b\nQ(a)\n");
  Structure b = induced_substructure(a, {1});
  CHECK(eval(a, psi));
  CHECK_FALSE(eval(b, psi));
  CHECK(eval(a, parse_prefix("(forall (x) (= x x))")));
  CHECK_THROWS_AS(eval(a, parse_prefix("(Q y)")), std::invalid_argument);
}

TEST_CASE("eval, compiled evaluation and a naive evaluator agree") {
  auto rng = exr::testing::make_rng(21);
  Signature sig = small_sig();
  int agree = 0;
  for (int i = 0; i < 600; ++i) {
    F f = exr::testing::random_formula(rng, 3, {});
    CompiledFormula cf(f);
    for (int n = 1; n <= 3; ++n) {
      Structure s = exr::testing::random_structure(rng, sig, n);
      bool e = eval(s, f);
      INFO(to_prefix(f));
      CHECK(e == naive(s, f));
      CHECK(e == cf.holds(s));
      ++agree;
    }
  }
  CHECK(agree == 1800);
  CHECK_THROWS_AS(CompiledFormula(parse_prefix("(P x)")), std::invalid_argument);
}

TEST_CASE("prefix format round trip") {
  auto rng = exr::testing::make_rng(22);
  for (int i = 0; i < 300; ++i) {
    F f = exr::testing::random_formula(rng, 4, {});
    CHECK(formula_equal(parse_prefix(to_prefix(f)), f));
  }
  auto all = parse_prefix_all("(P \"c\")\n(exists (x) (R x x))\n");
  CHECK(all.size() == 2);
  CHECK(free_vars(parse_prefix("(exists (x) (R x y))")) == std::set<std::string>{"y"});
}

TEST_CASE("rule satisfaction matches evaluation of the rule sentence") {
  CHECK(satisfies_rule(parse("@rel P/1\ndomain: a\n"), parse_rules("P(x) -> false").rules[0]));

  Structure full = parse("@rel R/2\ndomain: a b\nR(a,a)\nR(a,b)\nR(b,a)\nR(b,b)\n");
  Rule trans = parse_rules("R(x,y), R(y,z) -> R(x,z)").rules[0];
  CHECK(satisfies_rule(full, trans));
  Structure u = isomorphic_union(full, {{1}, {1, 2}}).result;
  auto v = rule_violation(u, trans);
  REQUIRE(v);
  CHECK(v->at("y") == 1);  // the chain passes through the shared element

  auto rng = exr::testing::make_rng(23);
  Signature sig;
  sig.add_relation("P", 1);
  sig.add_relation("Q", 1);
  sig.add_relation("R", 2);
  for (int i = 0; i < 300; ++i) {
    auto shape = static_cast<exr::testing::Shape>(i % 3);
    Rule r = parse_rules(exr::testing::random_rule_text(rng, shape)).rules[0];
    F f = rule_to_formula(r);
    for (int n = 1; n <= 3; ++n) {
      Structure s = exr::testing::random_structure(rng, sig, n);
      INFO(render_rule(r));
      CHECK(satisfies_rule(s, r) == naive(s, f));
    }
  }
}

TEST_CASE("pruned model enumeration equals filtered enumeration") {
  auto rng = exr::testing::make_rng(24);
  Signature sig;
  sig.add_relation("P", 1);
  sig.add_relation("Q", 1);
  sig.add_relation("R", 2);
  for (int i = 0; i < 40; ++i) {
    std::vector<Rule> rules;
    for (int k = 0; k < 2; ++k)
      rules.push_back(parse_rules(exr::testing::random_rule_text(rng, static_cast<exr::testing::Shape>(k))).rules[0]);
    std::vector<F> sentences;
    if (i % 2) sentences.push_back(exr::testing::random_formula(rng, 2, {}));
    Signature s2 = sig;
    s2.add_constant("c");
    Theory t = make_theory(s2, rules, sentences);
    CompiledTheory ct(t);
    for (int n = 1; n <= 2; ++n) {
      std::vector<Structure> pruned, filtered;
      ct.enumerate_models(iota_domain(n), [&](const Structure& s) { return pruned.push_back(s), true; });
      enumerate_over_domain(s2, iota_domain(n), [&](const Structure& s) {
        bool ok = true;
        for (const auto& r : rules) ok = ok && naive(s, rule_to_formula(r));
        for (const auto& f : sentences) ok = ok && naive(s, f);
        if (ok) filtered.push_back(s);
        return true;
      });
      CHECK(pruned == filtered);
    }
  }
}

TEST_CASE("homomorphism search against brute force") {
  Structure a = parse("@rel Q/1\ndomain: a b\nQ(a)\n");
  Structure b = induced_substructure(a, {1});
  CHECK(find_homomorphism(a, b));
  CHECK(find_homomorphism(b, a));
  CHECK(mutual_hom_pinned(b, {1}, a, {1}));
  CHECK(mutual_hom_pinned(b, {}, a, {}) == (find_homomorphism(a, b) && find_homomorphism(b, a)));
  Structure cyc = parse("@rel E/2\ndomain: a b c\nE(a,b)\nE(b,c)\nE(c,a)\n");
  Structure k2 = parse("@rel E/2\ndomain: a b\nE(a,b)\nE(b,a)\n");
  CHECK_FALSE(find_homomorphism(cyc, k2));
  auto id = find_homomorphism(cyc, cyc);
  REQUIRE(id);

  auto rng = exr::testing::make_rng(25);
  Signature sig = small_sig();
  for (int i = 0; i < 300; ++i) {
    Structure x = exr::testing::random_structure(rng, sig, 1 + i % 3);
    Structure y = exr::testing::random_structure(rng, sig, 1 + (i / 3) % 3, 0.6);
    auto h = find_homomorphism(x, y);
    CHECK(h.has_value() == brute_exists_hom(x, y));
    if (h) CHECK(brute_hom(x, y, h->map));

    bool strict_any = false, strict_onto = false;
    for (const auto& m : all_maps(x, y)) {
      if (!is_strict_homomorphism(x, y, m, false)) continue;
      strict_any = true;
      if (is_strict_homomorphism(x, y, m, true)) strict_onto = true;
    }
    auto s1 = find_strict_homomorphism(x, y, false);
    auto s2 = find_strict_homomorphism(x, y, true);
    CHECK(s1.has_value() == strict_any);
    CHECK(s2.has_value() == strict_onto);
    if (s1) CHECK(brute_hom(x, y, s1->map));

    Tuple tx = {x.domain.front()}, ty = {y.domain.back()};
    CHECK(mutual_hom_pinned(x, tx, y, ty) == brute_mutual(x, tx, y, ty));
    CHECK(mutual_hom_pinned(x, tx, y, ty) == mutual_hom_pinned(y, ty, x, tx));
  }
  // Plain but not strict: the target has an extra fact over the image.
  Structure p = parse("@rel P/1 Q/1\ndomain: a\nP(a)\n");
  Structure q = parse("@rel P/1 Q/1\ndomain: a\nP(a)\nQ(a)\n");
  CHECK(find_homomorphism(p, q));
  CHECK_FALSE(find_strict_homomorphism(p, q, true));
}

TEST_CASE("repeated pins force equal images") {
  Structure a = parse("@rel Q/1\ndomain: a b\nQ(a)\n");
  Structure b = parse("@rel Q/1\ndomain: b1 b2\nQ(b1)\nQ(b2)\n");
  CHECK_FALSE(mutual_hom_pinned(a, {1, 1}, b, {1, 2}));
}

TEST_CASE("global homomorphisms: definition with repeats and the retract characterization") {
  Structure a = parse("@rel Q/1\ndomain: a b\nQ(a)\n");
  Structure b = induced_substructure(a, {1});
  CHECK(is_globally_homomorphic(b, a).holds);
  CHECK_FALSE(is_globally_homomorphic(a, b).holds);
  CHECK(is_globally_homomorphic(a, a).holds);

  Signature sig;
  sig.add_relation("Q", 1);
  sig.add_relation("R", 2);
  auto all = all_structures(sig, 2);
  int positives = 0;
  for (const auto& p : all)
    for (const auto& m : all) {
      bool def = is_globally_homomorphic(p, m).holds;
      CHECK(def == brute_global(p, m, 2));
      // p => m iff p is isomorphic to a retract m|x.
      bool retract = false;
      for (std::uint32_t mask = 1; mask < (1u << m.size()) && !retract; ++mask) {
        ElemSet x;
        for (std::size_t i = 0; i < m.size(); ++i)
          if (mask >> i & 1) x.insert(m.domain[i]);
        if (find_retraction(m, x) && isomorphic(p, induced_substructure(m, x))) retract = true;
      }
      CHECK(def == retract);
      positives += def;
    }
  CHECK(positives > 0);
}

TEST_CASE("conjunctive queries") {
  Structure s = parse("@rel R/2\ndomain: a b\nR(a,b)\n");
  CHECK(eval_cq(s, fo::top()));
  CHECK(is_cq(parse_prefix("(exists (x y) (and (R x y) (= x x)))")));
  CHECK_FALSE(is_cq(parse_prefix("(exists (x) (not (R x x)))")));
  auto rng = exr::testing::make_rng(26);
  const std::vector<F> cqs = {
      parse_prefix("(exists (x y) (R x y))"),      parse_prefix("(exists (x) (R x x))"),
      parse_prefix("(exists (x y z) (and (R x y) (R y z)))"), parse_prefix("(exists (x y) (and (R x y) (= x y)))"),
      parse_prefix("(exists (y) (and (R \"c\" y) (R y \"c\")))"),
  };
  for (int i = 0; i < 100; ++i) {
    Structure t = exr::testing::random_structure(rng, small_sig(), 1 + i % 3);
    for (const auto& q : cqs) CHECK(eval_cq(t, q) == eval(t, q));
  }
}
