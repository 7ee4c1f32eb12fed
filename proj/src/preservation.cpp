#include "exrules/preservation.hpp"

#include <algorithm>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <stdexcept>

namespace exr {

const char* property_name(Property p) {
  switch (p) {
    case Property::GlobalHomPreimage: return "GlobalHomPreimage";
    case Property::DirectProduct: return "DirectProduct";
    case Property::StrictHomImage: return "StrictHomImage";
    case Property::StrictHomPreimage: return "StrictHomPreimage";
    case Property::IsomorphicUnion: return "IsomorphicUnion";
    case Property::DisjointUnion: return "DisjointUnion";
    case Property::Union: return "Union";
  }
  return "?";
}

const std::vector<Property>& all_properties() {
  static const std::vector<Property> v = {Property::GlobalHomPreimage, Property::DirectProduct,
                                          Property::StrictHomImage,    Property::StrictHomPreimage,
                                          Property::IsomorphicUnion,   Property::DisjointUnion,
                                          Property::Union};
  return v;
}

std::optional<Property> property_from_name(const std::string& s) {
  for (Property p : all_properties())
    if (s == property_name(p)) return p;
  return std::nullopt;
}

const char* failing_role(Property p) {
  switch (p) {
    case Property::GlobalHomPreimage: return "preimage";
    case Property::DirectProduct: return "product";
    case Property::StrictHomImage: return "image";
    case Property::StrictHomPreimage: return "preimage";
    case Property::IsomorphicUnion:
    case Property::DisjointUnion:
    case Property::Union: return "union";
  }
  return "?";
}

namespace {

Structure rename(const Structure& s, const std::map<Elem, Elem>& m) {
  std::vector<Elem> dom;
  for (Elem e : s.domain) dom.push_back(m.at(e));
  Structure out = make_structure(s.sig, dom);
  for (const auto& [c, e] : s.cst) out.cst[c] = m.at(e);
  for (const auto& [r, ts] : s.rel)
    for (const auto& t : ts) {
      Tuple u(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) u[i] = m.at(t[i]);
      out.rel[r].insert(std::move(u));
    }
  return out;
}

// Image of m under h (index of m.domain -> block 1..k), if h is strict.
std::optional<Structure> strict_image(const Structure& m, const std::vector<Elem>& h, int k) {
  std::map<Elem, Elem> hm;
  for (std::size_t i = 0; i < m.size(); ++i) hm[m.domain[i]] = h[i];
  Structure n = make_structure(m.sig, iota_domain(k));
  for (const auto& [c, e] : m.cst) n.cst[c] = hm.at(e);
  for (const auto& [r, ts] : m.rel)
    for (const auto& t : ts) {
      Tuple u(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) u[i] = hm.at(t[i]);
      n.rel[r].insert(std::move(u));
    }
  for (const auto& [r, ar] : m.sig.relations)
    for (const auto& t : all_tuples(m.domain, ar)) {
      Tuple u(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) u[i] = hm.at(t[i]);
      if (m.has(r, t) != n.has(r, u)) return std::nullopt;
    }
  return n;
}

// Strict preimage of m along g ({1..p} -> m.domain) with chosen constants.
Structure pullback(const Structure& m, const std::vector<Elem>& g, const std::map<std::string, Elem>& cst) {
  const int p = static_cast<int>(g.size());
  Structure n = make_structure(m.sig, iota_domain(p));
  n.cst = cst;
  for (const auto& [r, ar] : m.sig.relations)
    for (const auto& t : all_tuples(n.domain, ar)) {
      Tuple u(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) u[i] = g[t[i] - 1];
      if (m.has(r, u)) n.rel[r].insert(t);
    }
  return n;
}

std::map<Elem, Elem> as_map(const Structure& src, const std::vector<Elem>& img) {
  std::map<Elem, Elem> out;
  for (std::size_t i = 0; i < src.size(); ++i) out[src.domain[i]] = img[i];
  return out;
}

// Restricted growth strings: set partitions of n items, blocks numbered from 1.
void partitions(int n, const std::function<bool(const std::vector<Elem>&, int)>& cb) {
  std::vector<Elem> a(n, 0);
  bool stop = false;
  std::function<void(int, int)> rec = [&](int i, int k) {
    if (stop) return;
    if (i == n) {
      if (!cb(a, k)) stop = true;
      return;
    }
    for (int b = 1; b <= k + 1 && !stop; ++b) {
      a[i] = b;
      rec(i + 1, std::max(k, b));
    }
  };
  if (n == 0) {
    cb(a, 0);
    return;
  }
  rec(0, 0);
}

std::vector<ElemSet> guarded_sets(const Structure& m) {
  std::vector<ElemSet> out;
  const int n = static_cast<int>(m.size());
  for (int size = 0; size <= n; ++size) {
    std::vector<int> idx(size);
    std::function<void(int, int)> rec = [&](int pos, int from) {
      if (pos == size) {
        ElemSet x;
        for (int i : idx) x.insert(m.domain[i]);
        if (is_guarded_set(m, x)) out.push_back(x);
        return;
      }
      for (int i = from; i < n; ++i) {
        idx[pos] = i;
        rec(pos + 1, i + 1);
      }
    };
    rec(0, 0);
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Searcher {
 public:
  Searcher(const Theory& t, const Budget& b) : ct_(t), b_(b) {
    if (b.max_domain < 1 || b.max_pairs < 1 || b.max_guarded_family < 1)
      throw std::invalid_argument("budget counts must be positive");
  }

  Verdict run(Property p) {
    v_.property = p;
    v_.budget = b_;
    if (b_.mode == Mode::Exhaustive) exhaustive(p);
    else random(p);
    return v_;
  }

 private:
  const std::vector<Structure>& models(int n) {
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
    auto& v = cache_[n];
    ct_.enumerate_models(iota_domain(n), [&](const Structure& s) {
      v.push_back(s);
      return true;
    });
    return v;
  }

  // False once the candidate budget is spent.
  bool tick() {
    if (v_.stats.candidates >= b_.max_pairs) {
      v_.stats.budget_exhausted = true;
      return false;
    }
    ++v_.stats.candidates;
    return true;
  }

  bool test(const Structure& s, Certificate cert) {
    auto viol = ct_.violation(s);
    if (!viol) return false;
    cert.property = v_.property;
    cert.violation = *viol;
    v_.outcome = Outcome::Counterexample;
    v_.certificate = std::move(cert);
    return true;
  }

  bool done() const { return v_.outcome == Outcome::Counterexample || v_.stats.budget_exhausted; }

  // ---- candidate constructions shared by both modes; true when the search should stop

  bool try_retract(const Structure& m, const ElemSet& x) {
    if (x.size() == m.size()) return false;  // the model itself
    if (!tick()) return true;
    Structure p = induced_substructure(m, x);
    if (ct_.holds(p)) return false;
    auto r = find_retraction(m, x);
    if (!r) return false;
    Certificate c;
    c.structures["model"] = m;
    c.structures["preimage"] = p;
    std::map<Elem, Elem> emb;
    for (Elem e : x) emb[e] = e;
    c.maps["embedding"] = emb;
    c.maps["retraction"] = r->map;
    return test(p, std::move(c));
  }

  bool try_product(const Structure& a, const Structure& b) {
    if (!tick()) return true;
    Certificate c;
    c.structures["A"] = a;
    c.structures["B"] = b;
    Structure p = direct_product(a, b);
    c.structures["product"] = p;
    return test(p, std::move(c));
  }

  bool try_image(const Structure& m, const std::vector<Elem>& h, int k) {
    if (k == static_cast<int>(m.size())) return false;  // bijective: an isomorphic copy
    auto n = strict_image(m, h, k);
    if (!n) return false;
    if (!tick()) return true;
    Certificate c;
    c.structures["model"] = m;
    c.structures["image"] = *n;
    c.maps["h"] = as_map(m, h);
    return test(*n, std::move(c));
  }

  bool try_preimage(const Structure& m, const std::vector<Elem>& g, const std::map<std::string, Elem>& cst) {
    if (!tick()) return true;
    Structure n = pullback(m, g, cst);
    Certificate c;
    c.structures["model"] = m;
    c.structures["preimage"] = n;
    c.maps["h"] = as_map(n, g);
    return test(n, std::move(c));
  }

  bool try_iso_union(const Structure& m, const std::vector<ElemSet>& fam) {
    if (!tick()) return true;
    IsoUnion u = isomorphic_union(m, fam);
    Certificate c;
    c.structures["model"] = m;
    c.structures["union"] = u.result;
    c.family = fam;
    for (std::size_t i = 0; i < u.copies.size(); ++i) c.maps["copy" + std::to_string(i)] = u.copies[i].iso;
    return test(u.result, std::move(c));
  }

  bool try_union(const Structure& a, const Structure& b, bool disjoint) {
    if (a.cst != b.cst) return false;  // constants not aligned: skipped
    if (disjoint && !disjoint_union_compatible(a, b)) return false;
    if (!tick()) return true;
    Structure u = structure_union(a, b);
    Certificate c;
    c.structures["A"] = a;
    c.structures["B"] = b;
    c.structures["union"] = u;
    return test(u, std::move(c));
  }

  // Constants of a pullback range over the fibres of the model's constants.
  bool preimages_with_constants(const Structure& m, const std::vector<Elem>& g) {
    std::vector<std::string> cs(m.sig.constants.begin(), m.sig.constants.end());
    std::map<std::string, Elem> cst;
    std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
      if (i == cs.size()) return try_preimage(m, g, cst);
      for (std::size_t j = 0; j < g.size(); ++j)
        if (g[j] == m.cst.at(cs[i])) {
          cst[cs[i]] = static_cast<Elem>(j + 1);
          if (rec(i + 1)) return true;
        }
      return false;
    };
    return rec(0);
  }

  std::vector<Elem> union_domain_b(int na, int nb, int k) {
    std::vector<Elem> d;
    for (int i = na - k + 1; i <= na; ++i) d.push_back(i);
    for (int i = 1; i <= nb - k; ++i) d.push_back(na + i);
    return d;
  }

  void exhaustive(Property p) {
    const int mx = b_.max_domain;
    switch (p) {
      case Property::GlobalHomPreimage:
        for (int n = 1; n <= mx && !done(); ++n)
          for (const auto& m : models(n)) {
            ++v_.stats.structures;
            for (const auto& x : guarded_sets(m))
              if (!x.empty() && try_retract(m, x)) return;
          }
        return;
      case Property::DirectProduct:
        for (int n1 = 1; n1 <= mx; ++n1)
          for (int n2 = n1; n2 <= mx; ++n2) {
            const auto& ma = models(n1);
            const auto& mb = models(n2);
            for (std::size_t i = 0; i < ma.size(); ++i) {
              ++v_.stats.structures;
              for (std::size_t j = n1 == n2 ? i : 0; j < mb.size(); ++j)
                if (try_product(ma[i], mb[j])) return;
            }
          }
        return;
      case Property::StrictHomImage:
        for (int n = 1; n <= mx; ++n)
          for (const auto& m : models(n)) {
            ++v_.stats.structures;
            bool stop = false;
            partitions(n, [&](const std::vector<Elem>& h, int k) {
              stop = try_image(m, h, k);
              return !stop;
            });
            if (stop) return;
          }
        return;
      case Property::StrictHomPreimage:
        for (int n = 1; n <= mx; ++n)
          for (const auto& m : models(n)) {
            ++v_.stats.structures;
            for (int q = n; q <= mx; ++q)
              for (const auto& g : all_tuples(m.domain, q)) {
                if (ElemSet(g.begin(), g.end()).size() != m.size()) continue;  // onto only
                if (q == n) continue;  // a bijection: an isomorphic copy
                if (preimages_with_constants(m, g)) return;
              }
          }
        return;
      case Property::IsomorphicUnion:
        for (int n = 1; n <= mx; ++n)
          for (const auto& m : models(n)) {
            ++v_.stats.structures;
            auto gs = guarded_sets(m);
            for (int f = 2; f <= b_.max_guarded_family; ++f) {
              std::vector<int> idx(f);
              bool stop = false;
              std::function<void(int, int)> rec = [&](int pos, int from) {
                if (stop) return;
                if (pos == f) {
                  std::vector<ElemSet> fam;
                  for (int i : idx) fam.push_back(gs[i]);
                  stop = try_iso_union(m, fam);
                  return;
                }
                for (int i = from; i < static_cast<int>(gs.size()) && !stop; ++i) {
                  idx[pos] = i;
                  rec(pos + 1, i + 1);
                }
              };
              rec(0, 0);
              if (stop) return;
            }
          }
        return;
      case Property::DisjointUnion:
      case Property::Union: {
        const bool disjoint = p == Property::DisjointUnion;
        for (int na = 1; na <= mx; ++na)
          for (int nb = 1; nb <= mx; ++nb)
            for (int k = 0; k <= std::min(na, nb); ++k) {
              if (b_.max_union > 0 && na + nb - k > b_.max_union) continue;
              auto domb = union_domain_b(na, nb, k);
              std::map<Elem, Elem> ren;
              for (int i = 0; i < nb; ++i) ren[i + 1] = domb[i];
              std::vector<Structure> bs;
              for (const auto& b : models(nb)) bs.push_back(rename(b, ren));
              // Compatible pairs agree on the overlap, so B is looked up by its overlap part.
              ElemSet overlap;
              for (int i = na - k + 1; i <= na; ++i) overlap.insert(i);
              using Key = std::pair<std::map<std::string, Elem>, std::vector<std::pair<std::string, Tuple>>>;
              auto key = [&](const Structure& s) {
                Key out{s.cst, {}};
                for (const auto& [r, ts] : s.rel)
                  for (const auto& t : ts)
                    if (std::all_of(t.begin(), t.end(), [&](Elem e) { return overlap.count(e) > 0; }))
                      out.second.push_back({r, t});
                return out;
              };
              std::map<Key, std::vector<const Structure*>> by_overlap;
              if (disjoint && k > 0)
                for (const auto& b : bs) by_overlap[key(b)].push_back(&b);
              for (const auto& a : models(na)) {
                ++v_.stats.structures;
                if (disjoint && k > 0) {
                  auto it = by_overlap.find(key(a));
                  if (it == by_overlap.end()) continue;
                  for (const Structure* b : it->second)
                    if (try_union(a, *b, disjoint)) return;
                  continue;
                }
                for (const auto& b : bs)
                  if (try_union(a, b, disjoint)) return;
              }
            }
        return;
      }
    }
  }

  // ---- randomized mode

  Structure random_structure(std::mt19937_64& rng, const std::vector<Elem>& dom) {
    const Signature& sig = ct_.theory().sig;
    Structure s = make_structure(sig, dom);
    std::uniform_int_distribution<std::size_t> pick(0, dom.size() - 1);
    for (const auto& c : sig.constants) s.cst[c] = dom[pick(rng)];
    for (const auto& [r, ar] : sig.relations)
      for (const auto& t : all_tuples(s.domain, ar))
        if (rng() & 1) s.rel[r].insert(t);
    return s;
  }

  std::optional<Structure> random_model(std::mt19937_64& rng, const std::vector<Elem>& dom) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      Structure s = random_structure(rng, dom);
      if (ct_.holds(s)) return s;
    }
    return std::nullopt;
  }

  void random(Property p) {
    const int mx = b_.max_domain;
    for (std::uint64_t i = 0; !done(); ++i) {
      if (v_.stats.candidates >= b_.max_pairs) {
        v_.stats.budget_exhausted = true;
        return;
      }
      std::mt19937_64 rng(splitmix64(b_.seed ^ splitmix64(i)));
      std::uniform_int_distribution<int> size(1, mx);
      const int n = size(rng);
      auto m = random_model(rng, iota_domain(n));
      if (!m) {
        ++v_.stats.candidates;  // a failed draw still spends budget
        continue;
      }
      ++v_.stats.structures;
      switch (p) {
        case Property::GlobalHomPreimage: {
          auto gs = guarded_sets(*m);
          std::uniform_int_distribution<std::size_t> pick(0, gs.size() - 1);
          const ElemSet& x = gs[pick(rng)];
          if (x.empty()) ++v_.stats.candidates;
          else if (try_retract(*m, x)) return;
          break;
        }
        case Property::DirectProduct: {
          auto b = random_model(rng, iota_domain(size(rng)));
          if (!b) ++v_.stats.candidates;
          else if (try_product(*m, *b)) return;
          break;
        }
        case Property::StrictHomImage: {
          std::uniform_int_distribution<int> blk(1, n);
          std::vector<Elem> raw(n);
          for (auto& x : raw) x = blk(rng);
          std::map<Elem, Elem> norm;  // renumber blocks by first occurrence
          std::vector<Elem> h;
          for (Elem x : raw) {
            auto it = norm.emplace(x, static_cast<Elem>(norm.size() + 1)).first;
            h.push_back(it->second);
          }
          if (try_image(*m, h, static_cast<int>(norm.size()))) return;
          if (static_cast<int>(norm.size()) == n) ++v_.stats.candidates;
          break;
        }
        case Property::StrictHomPreimage: {
          std::uniform_int_distribution<int> qd(n, mx);
          const int q = qd(rng);
          std::vector<Elem> g(q);
          for (int j = 0; j < q; ++j) g[j] = j < n ? m->domain[j] : m->domain[rng() % n];
          std::shuffle(g.begin(), g.end(), rng);
          std::map<std::string, Elem> cst;
          for (const auto& c : m->sig.constants) {
            std::vector<Elem> fib;
            for (int j = 0; j < q; ++j)
              if (g[j] == m->cst.at(c)) fib.push_back(j + 1);
            cst[c] = fib[rng() % fib.size()];
          }
          if (try_preimage(*m, g, cst)) return;
          break;
        }
        case Property::IsomorphicUnion: {
          auto gs = guarded_sets(*m);
          std::uniform_int_distribution<int> fsz(1, std::max(1, b_.max_guarded_family));
          const int f = std::min<int>(fsz(rng), static_cast<int>(gs.size()));
          std::vector<std::size_t> idx(gs.size());
          for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
          std::shuffle(idx.begin(), idx.end(), rng);
          idx.resize(f);
          std::sort(idx.begin(), idx.end());
          std::vector<ElemSet> fam;
          for (auto j : idx) fam.push_back(gs[j]);
          if (try_iso_union(*m, fam)) return;
          break;
        }
        case Property::DisjointUnion:
        case Property::Union: {
          const int nb = size(rng);
          std::uniform_int_distribution<int> kd(0, std::min(n, nb));
          const int k = kd(rng);
          if (b_.max_union > 0 && n + nb - k > b_.max_union) {
            ++v_.stats.candidates;
            break;
          }
          auto b = random_model(rng, union_domain_b(n, nb, k));
          if (!b || m->cst != b->cst ||
              (p == Property::DisjointUnion && !disjoint_union_compatible(*m, *b))) {
            ++v_.stats.candidates;
            break;
          }
          if (try_union(*m, *b, p == Property::DisjointUnion)) return;
          break;
        }
      }
    }
  }

  CompiledTheory ct_;
  Budget b_;
  Verdict v_;
  std::map<int, std::vector<Structure>> cache_;
};

}  // namespace

Verdict check_preservation(const Theory& t, Property p, const Budget& budget) {
  return Searcher(t, budget).run(p);
}

Verdict check_preservation(const std::vector<Rule>& rules, Property p, const Budget& budget) {
  return check_preservation(make_theory(rules), p, budget);
}

std::map<Property, Verdict> property_matrix(const Theory& t, const Budget& budget) {
  std::map<Property, Verdict> out;
  for (Property p : all_properties()) out[p] = check_preservation(t, p, budget);
  return out;
}

std::map<Property, Verdict> property_matrix(const std::vector<Rule>& rules, const Budget& budget) {
  return property_matrix(make_theory(rules), budget);
}

// ------------------------------------------------------------------ replay

namespace {

bool fail(std::string* why, const std::string& msg) {
  if (why) *why = msg;
  return false;
}

// Checks the recorded violation with the plain first-order evaluator.
bool violation_holds(const Structure& s, const Violation& v, const Theory& t, std::string* why) {
  if (v.sentence) {
    if (v.index >= t.sentences.size()) return fail(why, "violation names a missing sentence");
    if (eval(s, t.sentences[v.index])) return fail(why, "recorded sentence holds");
    return true;
  }
  if (v.index >= t.rules.size()) return fail(why, "violation names a missing rule");
  const Rule& r = t.rules[v.index];
  for (const auto& u : universal_vars(r))
    if (!v.asg.count(u)) return fail(why, "violation assignment misses " + u);
  if (!eval(s, fo::conj_atoms(r.body), v.asg)) return fail(why, "violation body is false");
  for (const auto& h : r.heads)
    if (eval(s, fo::exists(h.exvars, fo::conj_atoms(h.atoms)), v.asg))
      return fail(why, "violation head holds");
  return true;
}

}  // namespace

bool replay(const Certificate& c, const Theory& t, std::string* why) {
  auto get = [&](const std::string& role) -> const Structure* {
    auto it = c.structures.find(role);
    return it == c.structures.end() ? nullptr : &it->second;
  };
  for (const auto& [role, s] : c.structures) {
    try {
      s.validate();
    } catch (const std::exception& e) {
      return fail(why, role + ": " + e.what());
    }
    if (!(s.sig == t.sig)) return fail(why, role + ": signature differs from the theory");
  }
  auto model = [&](const Structure* s, const char* role) {
    if (!s) return fail(why, std::string("missing structure ") + role);
    if (!satisfies(*s, t)) return fail(why, std::string(role) + " is not a model");
    return true;
  };
  const Structure* bad = get(failing_role(c.property));
  if (!bad) return fail(why, std::string("missing structure ") + failing_role(c.property));
  if (!violation_holds(*bad, c.violation, t, why)) return false;

  switch (c.property) {
    case Property::GlobalHomPreimage: {
      const Structure* m = get("model");
      if (!model(m, "model")) return false;
      if (!is_globally_homomorphic(*bad, *m).holds) return fail(why, "preimage is not globally homomorphic to model");
      return true;
    }
    case Property::DirectProduct: {
      const Structure *a = get("A"), *b = get("B");
      if (!model(a, "A") || !model(b, "B")) return false;
      if (!(direct_product(*a, *b) == *bad)) return fail(why, "product does not match A x B");
      return true;
    }
    case Property::StrictHomImage:
    case Property::StrictHomPreimage: {
      const Structure* m = get("model");
      if (!model(m, "model")) return false;
      auto it = c.maps.find("h");
      if (it == c.maps.end()) return fail(why, "missing map h");
      bool ok = c.property == Property::StrictHomImage ? is_strict_homomorphism(*m, *bad, it->second, true)
                                                       : is_strict_homomorphism(*bad, *m, it->second, true);
      if (!ok) return fail(why, "h is not a strict onto homomorphism");
      return true;
    }
    case Property::IsomorphicUnion: {
      const Structure* m = get("model");
      if (!model(m, "model")) return false;
      if (c.family.empty()) return fail(why, "empty family");
      Structure rebuilt = make_structure(m->sig, {});
      std::vector<ElemSet> images;
      ElemSet dom;
      for (std::size_t i = 0; i < c.family.size(); ++i) {
        const ElemSet& x = c.family[i];
        if (!is_guarded_set(*m, x)) return fail(why, "family member is not guarded");
        auto it = c.maps.find("copy" + std::to_string(i));
        if (it == c.maps.end()) return fail(why, "missing copy map");
        const auto& p = it->second;
        ElemSet img;
        for (Elem e : m->domain) {
          auto pe = p.find(e);
          if (pe == p.end()) return fail(why, "copy map is partial");
          img.insert(pe->second);
        }
        if (img.size() != m->size()) return fail(why, "copy map is not injective");
        for (Elem e : x)
          if (p.at(e) != e) return fail(why, "copy map moves an anchor");
        for (Elem e : img)
          if (m->in_domain(e) && !x.count(e)) return fail(why, "copy reuses a non-anchor element");
        for (const auto& [cn, ce] : m->cst)
          if (bad->cst.at(cn) != p.at(ce)) return fail(why, "copy breaks a constant");
        for (const auto& [r, ts] : m->rel)
          for (const auto& tt : ts) {
            Tuple u(tt.size());
            for (std::size_t k = 0; k < tt.size(); ++k) u[k] = p.at(tt[k]);
            rebuilt.rel[r].insert(u);
          }
        images.push_back(img);
        dom.insert(img.begin(), img.end());
      }
      for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j) {
          ElemSet a, b;
          std::set_intersection(images[i].begin(), images[i].end(), images[j].begin(), images[j].end(),
                                std::inserter(a, a.end()));
          std::set_intersection(c.family[i].begin(), c.family[i].end(), c.family[j].begin(),
                                c.family[j].end(), std::inserter(b, b.end()));
          if (a != b) return fail(why, "copies overlap outside their shared anchors");
        }
      if (std::vector<Elem>(dom.begin(), dom.end()) != bad->domain) return fail(why, "union domain mismatch");
      if (rebuilt.rel != bad->rel) return fail(why, "union facts mismatch");
      return true;
    }
    case Property::DisjointUnion:
    case Property::Union: {
      const Structure *a = get("A"), *b = get("B");
      if (!model(a, "A") || !model(b, "B")) return false;
      if (a->cst != b->cst) return fail(why, "constant interpretations differ");
      if (c.property == Property::DisjointUnion && !disjoint_union_compatible(*a, *b))
        return fail(why, "A and B disagree on their overlap");
      if (!(structure_union(*a, *b) == *bad)) return fail(why, "union does not match A u B");
      return true;
    }
  }
  return fail(why, "unknown property");
}

bool replay(const Verdict& v, const Theory& t, std::string* why) {
  if (!v.certificate) return fail(why, "verdict carries no certificate");
  if (v.certificate->property != v.property) return fail(why, "certificate property mismatch");
  return replay(*v.certificate, t, why);
}

bool replay(const Verdict& v, const std::vector<Rule>& rules, std::string* why) {
  return replay(v, make_theory(rules), why);
}

// ------------------------------------------------------------- text format

std::string write_certificate(const Certificate& c) {
  std::string out = "certificate: " + std::string(property_name(c.property)) + "\n";
  for (const auto& [role, s] : c.structures) out += "structure " + role + "\n" + write_structure(s) + "end\n";
  for (const auto& [name, m] : c.maps) {
    out += "map " + name + "\n";
    for (const auto& [x, y] : m) out += std::to_string(x) + " -> " + std::to_string(y) + "\n";
    out += "end\n";
  }
  if (!c.family.empty()) {
    out += "family:";
    for (const auto& x : c.family) {
      out += " {";
      bool first = true;
      for (Elem e : x) {
        out += (first ? "" : " ") + std::to_string(e);
        first = false;
      }
      out += "}";
    }
    out += "\n";
  }
  out += "violation: ";
  if (c.violation.sentence) {
    out += "sentence " + std::to_string(c.violation.index);
  } else {
    out += "rule " + std::to_string(c.violation.index);
    for (const auto& [v, e] : c.violation.asg) out += " " + v + "=" + std::to_string(e);
  }
  return out + "\n";
}

Certificate parse_certificate(const std::string& text) {
  Certificate c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_prop = false;
  auto bad = [&](const std::string& msg) { throw ParseError(lineno, 1, msg); };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("certificate:", 0) == 0) {
      std::string name = line.substr(12);
      name.erase(0, name.find_first_not_of(' '));
      auto p = property_from_name(name);
      if (!p) bad("unknown property " + name);
      c.property = *p;
      have_prop = true;
    } else if (line.rfind("structure ", 0) == 0) {
      std::string role = line.substr(10), body;
      std::string l;
      bool closed = false;
      while (std::getline(in, l)) {
        ++lineno;
        if (l == "end") {
          closed = true;
          break;
        }
        body += l + "\n";
      }
      if (!closed) bad("unterminated structure block");
      c.structures[role] = parse_structure(body).s;
    } else if (line.rfind("map ", 0) == 0) {
      std::string name = line.substr(4);
      auto& m = c.maps[name];
      std::string l;
      bool closed = false;
      while (std::getline(in, l)) {
        ++lineno;
        if (l == "end") {
          closed = true;
          break;
        }
        std::istringstream ls(l);
        Elem x, y;
        std::string arrow;
        if (!(ls >> x >> arrow >> y) || arrow != "->") bad("bad map line");
        m[x] = y;
      }
      if (!closed) bad("unterminated map block");
    } else if (line.rfind("family:", 0) == 0) {
      std::string rest = line.substr(7);
      std::size_t i = 0;
      while ((i = rest.find('{', i)) != std::string::npos) {
        auto j = rest.find('}', i);
        if (j == std::string::npos) bad("unterminated family member");
        std::istringstream ms(rest.substr(i + 1, j - i - 1));
        ElemSet x;
        Elem e;
        while (ms >> e) x.insert(e);
        c.family.push_back(x);
        i = j + 1;
      }
    } else if (line.rfind("violation:", 0) == 0) {
      std::istringstream vs(line.substr(10));
      std::string kind;
      vs >> kind >> c.violation.index;
      if (!vs) bad("bad violation line");
      c.violation.sentence = kind == "sentence";
      if (kind != "sentence" && kind != "rule") bad("bad violation kind");
      std::string kv;
      while (vs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) bad("bad violation binding");
        c.violation.asg[kv.substr(0, eq)] = std::stoi(kv.substr(eq + 1));
      }
    } else {
      bad("unexpected line: " + line);
    }
  }
  if (!have_prop) throw ParseError(lineno, 1, "missing 'certificate:' line");
  return c;
}

}  // namespace exr
