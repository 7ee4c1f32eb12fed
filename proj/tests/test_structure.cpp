#include <algorithm>
#include <iterator>

#include <doctest.h>

#include "exrules/semantics.hpp"
#include "support.hpp"

using namespace exr;

namespace {

Structure parse(const std::string& text) { return parse_structure(text).s; }

Signature sig_of(std::initializer_list<std::pair<const char*, int>> rels) {
  Signature s;
  for (const auto& [r, a] : rels) s.add_relation(r, a);
  return s;
}

}  // namespace

TEST_CASE("enumeration counts") {
  std::uint64_t n = 0;
  enumerate_structures(sig_of({{"Q", 1}}), 1, [&](const Structure&) { return ++n, true; });
  CHECK(n == 2);
  CHECK(all_structures(sig_of({{"R", 0}}), 1).size() == 2);
  CHECK(all_structures(sig_of({{"R", 2}}), 2).size() == 18);

  // Closed form: prod_R 2^(n^arity) per domain size.
  Signature sig = sig_of({{"P", 1}, {"R", 2}, {"N", 0}});
  for (int k = 1; k <= 2; ++k) {
    std::uint64_t seen = 0;
    enumerate_over_domain(sig, iota_domain(k), [&](const Structure& s) {
      s.validate();
      return ++seen, true;
    });
    std::uint64_t expect = 1;
    for (const auto& [r, ar] : sig.relations) {
      std::uint64_t cells = 1;
      for (int i = 0; i < ar; ++i) cells *= k;
      expect <<= cells;
    }
    CHECK(seen == expect);
    CHECK(count_structures(sig, k) == expect);
  }
  Signature with_c = sig_of({{"P", 1}});
  with_c.add_constant("c");
  CHECK(all_structures(with_c, 2).size() == 2 + 2 * 4);
}

TEST_CASE("structure text round trip") {
  auto ns = parse_structure("@rel E/2 C/1\ndomain: a b c\nE(a,b)\nE(b,c)\n");
  CHECK(ns.s.size() == 3);
  CHECK(ns.s.fact_count() == 2);
  auto back = parse_structure(write_structure(ns.s, ns.names));
  CHECK(back.s == ns.s);
  CHECK_THROWS(parse_structure("domain: a\nE(a,b)\n"));
}

TEST_CASE("induced substructure") {
  Structure a = parse("@rel Q/1\ndomain: a b\nQ(a)\n");
  Structure b = induced_substructure(a, {1});
  CHECK(b.size() == 1);
  CHECK(b.has("Q", {1}));
  CHECK(induced_substructure(a, {1, 2}) == a);

  auto rng = exr::testing::make_rng(1);
  Signature sig = sig_of({{"R", 2}});
  for (int i = 0; i < 50; ++i) {
    Structure s = exr::testing::random_structure(rng, sig, 3);
    Structure r = induced_substructure(s, {1, 3});
    for (const auto& t : all_tuples(s.domain, 2)) {
      bool inside = t[0] != 2 && t[1] != 2;
      CHECK(r.has("R", t) == (inside && s.has("R", t)));
    }
  }
}

TEST_CASE("unions") {
  Structure a = parse("@rel P/1 Q/1 R/1\ndomain: a\nQ(a)\n");
  Structure b = parse("@rel P/1 Q/1 R/1\ndomain: a\nP(a)\n");
  Structure u = structure_union(a, b);
  CHECK(u.has("P", {1}));
  CHECK(u.has("Q", {1}));
  CHECK(u.fact_count() == 2);
  CHECK(structure_union(a, a) == a);
  CHECK(structure_union(a, b) == structure_union(b, a));

  // Two-step centre pair: a=1, b=2, c=3.
  Signature sig = sig_of({{"E", 2}, {"C", 1}});
  Structure ea = make_structure(sig, {1, 2}), eb = make_structure(sig, {2, 3});
  ea.add("E", {1, 2});
  eb.add("E", {2, 3});
  CHECK(disjoint_union_compatible(ea, eb));
  Structure eu = structure_union(ea, eb);
  CHECK(eu.size() == 3);
  CHECK(eu.rel.at("E") == std::set<Tuple>{{1, 2}, {2, 3}});
  Structure loop = ea;
  loop.add("E", {2, 2});
  CHECK_FALSE(disjoint_union_compatible(loop, eb));
  CHECK(disjoint_union_compatible(make_structure(sig, {1}), make_structure(sig, {2})));
}

TEST_CASE("direct products") {
  Signature nullary = sig_of({{"R", 0}, {"S", 0}, {"T", 0}});
  Structure a = make_structure(nullary, {1}), b = make_structure(nullary, {1});
  a.add("R", {});
  a.add("S", {});
  b.add("R", {});
  b.add("T", {});
  Structure p = direct_product(a, b);
  CHECK(p.has("R", {}));
  CHECK_FALSE(p.has("S", {}));
  CHECK_FALSE(p.has("T", {}));

  auto rng = exr::testing::make_rng(2);
  Signature sig = sig_of({{"R", 2}, {"P", 1}});
  for (int i = 0; i < 40; ++i) {
    int na = 1 + i % 3, nb = 1 + (i / 3) % 3;
    Structure x = exr::testing::random_structure(rng, sig, na), y = exr::testing::random_structure(rng, sig, nb);
    Structure xy = direct_product(x, y), yx = direct_product(y, x);
    CHECK(xy.size() == x.size() * y.size());
    auto pairs = product_pairs(x, y);
    // Componentwise membership, checked over every candidate tuple.
    for (std::size_t i1 = 0; i1 < pairs.size(); ++i1) {
      CHECK(xy.has("P", {xy.domain[i1]}) == (x.has("P", {pairs[i1].first}) && y.has("P", {pairs[i1].second})));
      for (std::size_t i2 = 0; i2 < pairs.size(); ++i2)
        CHECK(xy.has("R", {xy.domain[i1], xy.domain[i2]}) ==
              (x.has("R", {pairs[i1].first, pairs[i2].first}) && y.has("R", {pairs[i1].second, pairs[i2].second})));
    }
    // Swap witness.
    auto pyx = product_pairs(y, x);
    std::map<Elem, Elem> swap;
    for (std::size_t i1 = 0; i1 < pairs.size(); ++i1)
      for (std::size_t i2 = 0; i2 < pyx.size(); ++i2)
        if (pairs[i1].first == pyx[i2].second && pairs[i1].second == pyx[i2].first)
          swap[xy.domain[i1]] = yx.domain[i2];
    CHECK(is_strict_homomorphism(xy, yx, swap, true));
    CHECK(isomorphic(direct_product(x, trivial_structure(sig)), x));
  }
  CHECK(product_many({a}) == a);
  CHECK(product_many({a, b}) == direct_product(a, b));
  Structure c = make_structure(nullary, {1});
  c.add("R", {});
  c.add("S", {});
  Structure abc = product_many({a, b, c});
  CHECK(abc.has("R", {}));
  CHECK_FALSE(abc.has("S", {}));
}

TEST_CASE("isomorphic copies and unions") {
  Signature sig = sig_of({{"R", 2}});
  Structure a = make_structure(sig, {1, 2});
  for (const auto& t : all_tuples(a.domain, 2)) a.add("R", t);

  FreshIds fresh;
  fresh.avoid(a);
  IsoCopy cx = iso_copy(a, {1}, fresh);
  CHECK(cx.copy.size() == 2);
  CHECK(cx.iso.at(1) == 1);
  CHECK(cx.iso.at(2) == 3);
  CHECK(cx.copy.fact_count() == 4);
  IsoCopy full = iso_copy(a, {1, 2}, fresh);
  CHECK(full.copy == a);
  IsoCopy none = iso_copy(a, {}, fresh);
  for (const auto& [k, v] : none.iso) CHECK_FALSE(a.in_domain(v));

  IsoUnion u = isomorphic_union(a, {{1}, {1, 2}});
  CHECK(u.result.size() == 3);
  CHECK(u.result.fact_count() == 7);  // {a,b}^2 u {a,b'}^2
  CHECK(isomorphic_union(a, {{1, 2}}).result == a);

  // Copies are isomorphisms onto their images, and overlap exactly on the anchors.
  auto rng = exr::testing::make_rng(3);
  for (int i = 0; i < 30; ++i) {
    Structure s = exr::testing::random_structure(rng, sig, 3);
    std::vector<ElemSet> fam = {{1}, {2, 3}, {1, 3}};
    IsoUnion iu = isomorphic_union(s, fam);
    for (std::size_t k = 0; k < fam.size(); ++k) {
      const auto& cp = iu.copies[k];
      CHECK(is_strict_homomorphism(s, cp.copy, cp.iso, true));
      for (std::size_t l = k + 1; l < fam.size(); ++l) {
        ElemSet dk(cp.copy.domain.begin(), cp.copy.domain.end());
        ElemSet both, anchors;
        for (Elem e : iu.copies[l].copy.domain)
          if (dk.count(e)) both.insert(e);
        std::set_intersection(fam[k].begin(), fam[k].end(), fam[l].begin(), fam[l].end(),
                              std::inserter(anchors, anchors.end()));
        CHECK(both == anchors);
      }
    }
  }
}

TEST_CASE("trivial and sharp structures") {
  Signature sig = sig_of({{"P", 1}, {"Q", 1}, {"R", 2}});
  sig.add_constant("c");
  Structure t = trivial_structure(sig);
  CHECK(t.size() == 1);
  CHECK(t.fact_count() == 3);
  CHECK(t.cst.at("c") == kStar);
  Structure sh = sharp_structure(sig);
  CHECK(sh.size() == 2);
  CHECK(sh.has("R", {kStar, kStar}));
  CHECK(sh.fact_count() == 3);
  for (const auto& [r, ts] : sh.rel)
    for (const auto& tu : ts)
      for (Elem e : tu) CHECK(e == kStar);
  Structure n0 = sharp_structure(sig_of({{"R", 0}}));
  CHECK(n0.has("R", {}));
  CHECK(n0.size() == 2);
}

TEST_CASE("constant expansion") {
  Structure a = parse("@rel Q/1\ndomain: a b\nQ(a)\n");
  CHECK(expand_with_constants(a, {}) == a);
  Structure e = expand_with_constants(a, {1, 1});
  CHECK(e.cst.size() == 2);
  for (const auto& [c, v] : e.cst) CHECK(v == 1);
}
