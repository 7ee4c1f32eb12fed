#include "exrules/semantics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace exr {

F rule_to_formula(const Rule& r) {
  auto u = universal_vars(r);
  F head;
  if (r.heads.empty()) {
    head = fo::bot();
  } else {
    std::vector<F> ds;
    for (const auto& h : r.heads) ds.push_back(fo::exists(h.exvars, fo::conj_atoms(h.atoms)));
    head = fo::disj(std::move(ds));
  }
  return fo::forall(std::vector<std::string>(u.begin(), u.end()),
                    fo::implies(fo::conj_atoms(r.body), head));
}

// ------------------------------------------------------------ compiled rule

CompiledRule::CompiledRule(const Rule& r) {
  auto u = universal_vars(r);
  uvars_.assign(u.begin(), u.end());
  std::map<std::string, int> slot;
  for (std::size_t i = 0; i < uvars_.size(); ++i) slot[uvars_[i]] = static_cast<int>(i);
  nslots_ = static_cast<int>(uvars_.size());
  auto compile = [&](const Atom& a, const std::map<std::string, int>& sl) {
    CAtom c;
    c.eq = a.is_eq();
    c.rel = a.rel;
    for (const auto& t : a.args) {
      CTerm ct;
      if (t.is_var()) {
        ct.slot = sl.at(t.name);
        c.ready = std::max(c.ready, ct.slot);
      } else {
        ct.cname = t.name;
      }
      c.args.push_back(ct);
    }
    return c;
  };
  for (const auto& a : r.body) body_.push_back(compile(a, slot));
  for (const auto& h : r.heads) {
    CDisjunct d;
    d.first_slot = nslots_;
    d.nex = static_cast<int>(h.exvars.size());
    auto sl = slot;
    for (const auto& y : h.exvars) sl[y] = nslots_++;
    for (const auto& a : h.atoms) d.atoms.push_back(compile(a, sl));
    heads_.push_back(std::move(d));
  }
}

bool CompiledRule::atom_true(const CAtom& a, const Structure& s, const std::vector<Elem>& val,
                             Tuple& buf) const {
  auto value = [&](const CTerm& t) { return t.slot >= 0 ? val[t.slot] : s.cst.at(t.cname); };
  if (a.eq) return value(a.args[0]) == value(a.args[1]);
  buf.resize(a.args.size());
  for (std::size_t i = 0; i < a.args.size(); ++i) buf[i] = value(a.args[i]);
  return s.rel.at(a.rel).count(buf) > 0;
}

bool CompiledRule::disjunct_true(const CDisjunct& d, const Structure& s, std::vector<Elem>& val,
                                 int k, Tuple& buf) const {
  // k counts bound existential slots; atoms become checkable once their ready slot is bound.
  int bound_upto = d.first_slot + k - 1;
  for (const auto& a : d.atoms) {
    bool newly = k == 0 ? a.ready < d.first_slot : a.ready == bound_upto;
    if (newly && !atom_true(a, s, val, buf)) return false;
  }
  if (k == d.nex) return true;
  for (Elem e : s.domain) {
    val[d.first_slot + k] = e;
    if (disjunct_true(d, s, val, k + 1, buf)) return true;
  }
  return false;
}

std::optional<Assignment> CompiledRule::violation(const Structure& s) const {
  std::vector<Elem> val(nslots_, 0);
  Tuple buf;
  const int nu = static_cast<int>(uvars_.size());
  for (const auto& a : body_)
    if (a.ready < 0 && !atom_true(a, s, val, buf)) return std::nullopt;
  std::optional<Assignment> found;
  std::function<bool(int)> rec = [&](int k) -> bool {
    if (k == nu) {
      for (const auto& d : heads_)
        if (disjunct_true(d, s, val, 0, buf)) return false;
      Assignment asg;
      for (int i = 0; i < nu; ++i) asg[uvars_[i]] = val[i];
      found = std::move(asg);
      return true;
    }
    for (Elem e : s.domain) {
      val[k] = e;
      bool ok = true;
      for (const auto& a : body_)
        if (a.ready == k && !atom_true(a, s, val, buf)) {
          ok = false;
          break;
        }
      if (ok && rec(k + 1)) return true;
    }
    return false;
  };
  rec(0);
  return found;
}

std::optional<Assignment> rule_violation(const Structure& s, const Rule& r) {
  return CompiledRule(r).violation(s);
}

bool satisfies_rule(const Structure& s, const Rule& r) { return !rule_violation(s, r); }

// ------------------------------------------------------------------ theory

Theory make_theory(const Signature& sig, const std::vector<Rule>& rules, const std::vector<F>& sentences) {
  Theory t;
  t.sig = sig;
  t.sig.merge(signature_of(rules));
  for (const auto& f : sentences) t.sig.merge(formula_signature(f));
  t.rules = rules;
  t.sentences = sentences;
  return t;
}

Theory make_theory(const std::vector<Rule>& rules, const std::vector<F>& sentences) {
  return make_theory(Signature{}, rules, sentences);
}

CompiledTheory::CompiledTheory(const Theory& t) : t_(t) {
  for (const auto& [r, ar] : t_.sig.relations) rel_order_.push_back(r);
  auto level = [&](const Signature& s) {
    int lv = -1;
    for (const auto& [r, ar] : s.relations) {
      auto it = std::find(rel_order_.begin(), rel_order_.end(), r);
      if (it == rel_order_.end()) throw std::invalid_argument("relation outside the theory signature: " + r);
      lv = std::max(lv, static_cast<int>(it - rel_order_.begin()));
    }
    return lv;
  };
  for (std::size_t i = 0; i < t_.rules.size(); ++i) {
    rules_.emplace_back(t_.rules[i]);
    units_.push_back({false, i, nullptr, level(signature_of({t_.rules[i]})), nullptr});
  }
  for (std::size_t j = 0; j < t_.sentences.size(); ++j) {
    sentences_.emplace_back(t_.sentences[j]);
    for (const auto& c : top_conjuncts(t_.sentences[j]))
      units_.push_back({true, j, c, level(formula_signature(c)), std::make_shared<const CompiledFormula>(c)});
  }
}

std::optional<Violation> CompiledTheory::violation(const Structure& s) const {
  for (std::size_t i = 0; i < rules_.size(); ++i)
    if (auto v = rules_[i].violation(s)) return Violation{false, i, *v};
  for (std::size_t j = 0; j < t_.sentences.size(); ++j)
    if (!sentences_[j].holds(s)) return Violation{true, j, {}};
  return std::nullopt;
}

EnumStats CompiledTheory::enumerate_models(const std::vector<Elem>& domain,
                                           const std::function<bool(const Structure&)>& cb,
                                           std::uint64_t cap) const {
  EnumStats st;
  Structure s = make_structure(t_.sig, domain);
  std::vector<std::string> consts(t_.sig.constants.begin(), t_.sig.constants.end());
  std::vector<std::vector<Tuple>> tuples;
  for (const auto& r : rel_order_) {
    tuples.push_back(all_tuples(s.domain, t_.sig.relations.at(r)));
    if (tuples.back().size() > 62) throw std::length_error("relation table too large to enumerate");
  }
  std::vector<std::vector<const Unit*>> at_level(rel_order_.size() + 1);
  for (const auto& u : units_) at_level[u.ready + 1].push_back(&u);
  auto ok_at = [&](int lv) {
    for (const Unit* u : at_level[lv + 1]) {
      bool good = u->sentence ? u->cf->holds(s) : rules_[u->index].holds(s);
      if (!good) return false;
    }
    return true;
  };
  bool stop = false;
  std::function<void(std::size_t)> rel_level = [&](std::size_t i) {
    if (i == rel_order_.size()) {
      if (st.emitted >= cap) {
        st.capped = true;
        stop = true;
        return;
      }
      ++st.emitted;
      if (!cb(s)) stop = true;
      return;
    }
    auto& table = s.rel[rel_order_[i]];
    const auto& ts = tuples[i];
    const std::uint64_t n = std::uint64_t{1} << ts.size();
    for (std::uint64_t m = 0; m < n && !stop; ++m) {
      table.clear();
      for (std::size_t b = 0; b < ts.size(); ++b)
        if (m >> b & 1) table.insert(ts[b]);
      if (ok_at(static_cast<int>(i))) rel_level(i + 1);
    }
    table.clear();
  };
  std::function<void(std::size_t)> const_level = [&](std::size_t i) {
    if (stop) return;
    if (i == consts.size()) {
      if (ok_at(-1)) rel_level(0);
      return;
    }
    for (Elem e : s.domain) {
      s.cst[consts[i]] = e;
      const_level(i + 1);
      if (stop) return;
    }
  };
  const_level(0);
  return st;
}

std::optional<Violation> theory_violation(const Structure& s, const Theory& t) {
  return CompiledTheory(t).violation(s);
}

bool satisfies(const Structure& s, const Theory& t) { return !theory_violation(s, t); }

// ----------------------------------------------------------- homomorphisms

bool is_homomorphism(const Structure& a, const Structure& b, const std::map<Elem, Elem>& h) {
  for (Elem e : a.domain) {
    auto it = h.find(e);
    if (it == h.end() || !b.in_domain(it->second)) return false;
  }
  for (const auto& [c, e] : a.cst) {
    auto it = b.cst.find(c);
    if (it == b.cst.end() || h.at(e) != it->second) return false;
  }
  for (const auto& [r, ts] : a.rel) {
    auto it = b.rel.find(r);
    if (it == b.rel.end()) return false;
    for (const auto& t : ts) {
      Tuple u(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) u[i] = h.at(t[i]);
      if (!it->second.count(u)) return false;
    }
  }
  return true;
}

bool is_strict_homomorphism(const Structure& a, const Structure& b, const std::map<Elem, Elem>& h,
                            bool require_onto) {
  if (!is_homomorphism(a, b, h)) return false;
  for (const auto& [r, ar] : a.sig.relations) {
    const auto& tb = b.rel.at(r);
    for (const auto& t : all_tuples(a.domain, ar)) {
      Tuple u(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) u[i] = h.at(t[i]);
      if (tb.count(u) && !a.has(r, t)) return false;
    }
  }
  if (require_onto) {
    ElemSet img;
    for (const auto& [x, y] : h) img.insert(y);
    for (Elem e : b.domain)
      if (!img.count(e)) return false;
  }
  return true;
}

namespace {

class HomSearch {
 public:
  HomSearch(const Structure& a, const Structure& b, std::map<Elem, Elem> pins, bool strict, bool onto)
      : a_(a), b_(b), pins_(std::move(pins)), strict_(strict), onto_(onto) {}

  std::optional<std::map<Elem, Elem>> run() {
    if (!(a_.sig == b_.sig)) throw std::invalid_argument("homomorphism: signature mismatch");
    for (const auto& [c, e] : a_.cst) {
      Elem target = b_.cst.at(c);
      auto [it, fresh] = pins_.emplace(e, target);
      if (!fresh && it->second != target) return std::nullopt;
    }
    for (const auto& [x, y] : pins_)
      if (!a_.in_domain(x) || !b_.in_domain(y)) return std::nullopt;
    if (onto_ && b_.size() > a_.size()) return std::nullopt;
    // Order: pinned first, then by descending degree.
    std::map<Elem, int> degree;
    for (const auto& [r, ts] : a_.rel)
      for (const auto& t : ts)
        for (Elem e : t) ++degree[e];
    order_ = a_.domain;
    std::stable_sort(order_.begin(), order_.end(), [&](Elem x, Elem y) {
      bool px = pins_.count(x), py = pins_.count(y);
      if (px != py) return px;
      return degree[x] > degree[y];
    });
    for (std::size_t i = 0; i < order_.size(); ++i) pos_[order_[i]] = static_cast<int>(i);
    checks_.assign(order_.size() + 1, {});
    auto ready = [&](const Tuple& t) {
      int r = -1;
      for (Elem e : t) r = std::max(r, pos_[e]);
      return r;
    };
    for (const auto& [r, ar] : a_.sig.relations) {
      const auto& src = a_.rel.at(r);
      if (strict_) {
        for (auto& t : all_tuples(a_.domain, ar)) {
          int lv = ready(t);
          bool in = src.count(t) > 0;
          checks_[lv + 1].push_back({&r, std::move(t), in});
        }
      } else {
        for (const auto& t : src) checks_[ready(t) + 1].push_back({&r, t, true});
      }
    }
    if (!check_level(-1)) return std::nullopt;
    for (Elem e : b_.domain) hits_[e] = 0;
    if (search(0)) return h_;
    return std::nullopt;
  }

 private:
  struct Check {
    const std::string* rel;
    Tuple t;
    bool in_source;
  };

  bool check_level(int lv) {
    Tuple u;
    for (const auto& c : checks_[lv + 1]) {
      u.resize(c.t.size());
      for (std::size_t i = 0; i < c.t.size(); ++i) u[i] = h_[c.t[i]];
      bool in_target = b_.rel.at(*c.rel).count(u) > 0;
      if (c.in_source && !in_target) return false;
      if (strict_ && !c.in_source && in_target) return false;
    }
    return true;
  }

  bool search(std::size_t k) {
    if (k == order_.size()) {
      if (onto_)
        for (const auto& [e, n] : hits_)
          if (n == 0) return false;
      return true;
    }
    if (onto_) {
      std::size_t uncovered = 0;
      for (const auto& [e, n] : hits_)
        if (n == 0) ++uncovered;
      if (uncovered > order_.size() - k) return false;
    }
    Elem x = order_[k];
    auto pin = pins_.find(x);
    for (Elem y : b_.domain) {
      if (pin != pins_.end() && pin->second != y) continue;
      h_[x] = y;
      ++hits_[y];
      if (check_level(static_cast<int>(k)) && search(k + 1)) return true;
      --hits_[y];
    }
    h_.erase(x);
    return false;
  }

  const Structure& a_;
  const Structure& b_;
  std::map<Elem, Elem> pins_;
  bool strict_;
  bool onto_;
  std::vector<Elem> order_;
  std::map<Elem, int> pos_;
  std::vector<std::vector<Check>> checks_;
  std::map<Elem, Elem> h_;
  std::map<Elem, int> hits_;
};

}  // namespace

std::optional<HomWitness> find_homomorphism_pinned(const Structure& a, const Structure& b,
                                                   const std::map<Elem, Elem>& pins) {
  auto m = HomSearch(a, b, pins, false, false).run();
  if (!m) return std::nullopt;
  return HomWitness{*m, HomWitness::Kind::Plain, false};
}

std::optional<HomWitness> find_homomorphism(const Structure& a, const Structure& b) {
  return find_homomorphism_pinned(a, b, {});
}

std::optional<HomWitness> find_strict_homomorphism(const Structure& a, const Structure& b,
                                                   bool require_onto) {
  auto m = HomSearch(a, b, {}, true, require_onto).run();
  if (!m) return std::nullopt;
  return HomWitness{*m, HomWitness::Kind::Strict, require_onto};
}

std::optional<std::map<Elem, Elem>> find_isomorphism(const Structure& a, const Structure& b) {
  if (a.size() != b.size() || !(a.sig == b.sig)) return std::nullopt;
  for (const auto& [r, ts] : a.rel)
    if (ts.size() != b.rel.at(r).size()) return std::nullopt;
  auto w = find_strict_homomorphism(a, b, true);
  if (!w) return std::nullopt;
  return w->map;
}

bool isomorphic(const Structure& a, const Structure& b) { return find_isomorphism(a, b).has_value(); }

bool mutual_hom_pinned(const Structure& a, const Tuple& ta, const Structure& b, const Tuple& tb) {
  if (ta.size() != tb.size()) throw std::invalid_argument("mutual_hom_pinned: tuple length mismatch");
  Signature joint = a.sig;
  joint.merge(b.sig);
  auto names = fresh_constant_names(joint, ta.size());
  Structure ea = expand_with_constants(a, ta, names);
  Structure eb = expand_with_constants(b, tb, names);
  return find_homomorphism(ea, eb) && find_homomorphism(eb, ea);
}

GlobalHomResult is_globally_homomorphic(const Structure& a, const Structure& b) {
  GlobalHomResult res;
  const std::size_t n = a.size();
  for (std::size_t len = 0; len <= n; ++len) {
    // Duplicate-free tuples of this length, lexicographic.
    std::vector<Tuple> tas;
    Tuple cur;
    std::vector<bool> used(n, false);
    std::function<void()> gen = [&]() {
      if (cur.size() == len) {
        tas.push_back(cur);
        return;
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        used[i] = true;
        cur.push_back(a.domain[i]);
        gen();
        cur.pop_back();
        used[i] = false;
      }
    };
    gen();
    auto candidates = all_tuples(b.domain, static_cast<int>(len));
    for (const auto& ta : tas) {
      bool found = false;
      for (const auto& tb : candidates) {
        if (mutual_hom_pinned(a, ta, b, tb)) {
          res.witnesses.emplace_back(ta, tb);
          found = true;
          break;
        }
      }
      if (!found) {
        res.failing = ta;
        res.holds = false;
        return res;
      }
    }
  }
  res.holds = true;
  return res;
}

std::optional<HomWitness> find_retraction(const Structure& m, const ElemSet& x) {
  if (x.empty() || !is_guarded_set(m, x)) return std::nullopt;
  Structure target = induced_substructure(m, x);
  std::map<Elem, Elem> pins;
  for (Elem e : x) pins[e] = e;
  return find_homomorphism_pinned(m, target, pins);
}

// --------------------------------------------------------------------- CQs

namespace {

bool cq_matrix(const F& f) {
  using K = Formula::Kind;
  if (f->kind == K::Atom || f->kind == K::Eq || f->kind == K::True) return true;
  if (f->kind != K::And) return false;
  return std::all_of(f->kids.begin(), f->kids.end(), [](const F& k) {
    return k->kind == K::Atom || k->kind == K::Eq || k->kind == K::True;
  });
}

}  // namespace

bool is_cq(const F& q) {
  F cur = q;
  while (cur->kind == Formula::Kind::Exists) cur = cur->kids[0];
  return cq_matrix(cur);
}

bool eval_cq(const Structure& s, const F& q, const Assignment& asg) {
  if (!is_cq(q)) throw std::invalid_argument("eval_cq: formula is not a conjunctive query");
  std::vector<std::string> bound;
  F cur = q;
  while (cur->kind == Formula::Kind::Exists) {
    for (const auto& v : cur->vars) bound.push_back(v);
    cur = cur->kids[0];
  }
  std::vector<F> atoms;
  if (cur->kind == Formula::Kind::And) atoms = cur->kids;
  else atoms = {cur};
  for (const auto& v : free_vars(q))
    if (!asg.count(v)) throw std::invalid_argument("eval_cq: unbound variable " + v);
  // A later binder shadows an earlier one; keep the innermost position.
  std::map<std::string, int> slot;
  for (std::size_t i = 0; i < bound.size(); ++i) slot[bound[i]] = static_cast<int>(i);
  std::vector<int> ready(atoms.size(), -1);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (const auto& t : atoms[i]->args)
      if (t.is_var() && slot.count(t.name)) ready[i] = std::max(ready[i], slot[t.name]);
  Assignment val = asg;
  auto check = [&](int lv) {
    for (std::size_t i = 0; i < atoms.size(); ++i)
      if (ready[i] == lv && !eval(s, atoms[i], val)) return false;
    return true;
  };
  if (!check(-1)) return false;
  std::function<bool(std::size_t)> rec = [&](std::size_t k) -> bool {
    if (k == bound.size()) return true;
    for (Elem e : s.domain) {
      val[bound[k]] = e;
      if (slot[bound[k]] == static_cast<int>(k) ? check(static_cast<int>(k)) && rec(k + 1) : rec(k + 1))
        return true;
    }
    return false;
  };
  return rec(0);
}

}  // namespace exr
