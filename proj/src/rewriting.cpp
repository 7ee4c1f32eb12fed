#include "exrules/rewriting.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace exr {

namespace {

template <class T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

std::vector<Atom> dedupe(const std::vector<Atom>& atoms) {
  std::vector<Atom> out;
  for (const auto& a : atoms) push_unique(out, a);
  return out;
}

Term subst_term(const Term& t, const std::map<std::string, Term>& m) {
  if (!t.is_var()) return t;
  auto it = m.find(t.name);
  return it == m.end() ? t : it->second;
}

Atom subst_atom(const Atom& a, const std::map<std::string, Term>& m) {
  Atom out = a;
  for (auto& t : out.args) t = subst_term(t, m);
  return out;
}

std::vector<Atom> subst_atoms(const std::vector<Atom>& as, const std::map<std::string, Term>& m) {
  std::vector<Atom> out;
  for (const auto& a : as) out.push_back(subst_atom(a, m));
  return dedupe(out);
}

// Substitutes universal variables; disjuncts binding a name existentially are left alone there.
Rule subst_universal(const Rule& r, const std::map<std::string, Term>& m) {
  Rule out;
  out.label = r.label;
  out.body = subst_atoms(r.body, m);
  for (const auto& h : r.heads) {
    auto local = m;
    for (const auto& e : h.exvars) local.erase(e);
    out.heads.push_back({h.exvars, subst_atoms(h.atoms, local)});
  }
  return out;
}

bool mentions(const std::vector<Atom>& as, const std::string& var) {
  for (const auto& a : as)
    for (const auto& t : a.args)
      if (t.is_var() && t.name == var) return true;
  return false;
}

std::vector<std::string> live_exvars(const std::vector<std::string>& ex, const std::vector<Atom>& atoms) {
  std::vector<std::string> out;
  for (const auto& e : ex)
    if (mentions(atoms, e)) out.push_back(e);
  return out;
}

Signature merged_signature(const Theory& a, const Theory& b) {
  Signature s = a.sig;
  s.merge(b.sig);
  return s;
}

}  // namespace

std::vector<Rule> Rewrite::all() const {
  std::vector<Rule> out = rules;
  out.insert(out.end(), residuals.begin(), residuals.end());
  return out;
}

// --------------------------------------------------------------- equivalence

EquivalenceReport bounded_equivalence(const Theory& input, const Theory& output, int max_domain,
                                      std::uint64_t cap) {
  Signature sig = merged_signature(input, output);
  CompiledTheory a(make_theory(sig, input.rules, input.sentences));
  CompiledTheory b(make_theory(sig, output.rules, output.sentences));
  EquivalenceReport rep;
  rep.max_domain = max_domain;
  auto st = enumerate_structures(
      sig, max_domain,
      [&](const Structure& s) {
        ++rep.structures;
        bool ia = a.holds(s), ib = b.holds(s);
        if (ia == ib) return true;
        rep.equivalent = false;
        rep.witness = s;
        rep.witness_models_input = ia;
        return false;
      },
      cap);
  rep.capped = st.capped;
  return rep;
}

EquivalenceReport bounded_equivalence(const std::vector<Rule>& input, const std::vector<Rule>& output,
                                      int max_domain, std::uint64_t cap) {
  return bounded_equivalence(make_theory(input), make_theory(output), max_domain, cap);
}

Entailment entails_bounded(const std::vector<Rule>& premises, const Rule& conclusion, const Budget& budget) {
  Signature sig = signature_of(premises);
  sig.merge(signature_of({conclusion}));
  CompiledTheory ct(make_theory(sig, premises));
  CompiledRule goal(conclusion);
  Entailment out;
  std::uint64_t left = budget.max_pairs;
  for (int n = 1; n <= budget.max_domain && !out.refuted && left > 0; ++n) {
    auto st = ct.enumerate_models(
        iota_domain(n),
        [&](const Structure& s) {
          if (goal.holds(s)) return true;
          out.refuted = true;
          out.countermodel = s;
          return false;
        },
        left);
    left -= std::min(left, st.emitted);
  }
  return out;
}

// ----------------------------------------------------------------- DED -> ED

std::vector<Rule> split_ded(const Rule& r) {
  if (!classify(r).has(Flag::DED)) throw std::invalid_argument("split_ded: not a DED: " + render_rule(r));
  std::vector<Rule> out;
  for (const auto& h : r.heads) push_unique(out, Rule{r.body, {h}, r.label});
  return out;
}

Rewrite ded_to_ed_bounded(const std::vector<Rule>& rules, const Budget& budget) {
  std::vector<Rule> split;
  for (const auto& r : rules)
    for (const auto& e : split_ded(r)) push_unique(split, e);
  Rewrite out;
  for (const auto& g : split) {
    if (entails_bounded(rules, g, budget).refuted) out.notes.push_back("dropped (refuted): " + render_rule(g));
    else out.rules.push_back(g);
  }
  out.report = bounded_equivalence(rules, out.rules, budget.max_domain);
  return out;
}

// ---------------------------------------------------------------- equalities

Rewrite eliminate_body_equalities(const Rule& r) {
  Rule cur = r;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < cur.body.size(); ++i) {
      const Atom& a = cur.body[i];
      if (!a.is_eq()) continue;
      Term l = a.args[0], rt = a.args[1];
      if (l.is_const() && rt.is_const() && l != rt) continue;  // c=d stays
      cur.body.erase(cur.body.begin() + static_cast<std::ptrdiff_t>(i));
      if (l != rt) {
        std::map<std::string, Term> m;
        if (rt.is_var()) m[rt.name] = l;
        else m[l.name] = rt;
        cur = subst_universal(cur, m);
      }
      changed = true;
      break;
    }
  }
  Rewrite out;
  bool residual = std::any_of(cur.body.begin(), cur.body.end(), [](const Atom& a) { return a.is_eq(); });
  if (residual) {
    out.residuals.push_back(cur);
    out.notes.push_back("body equality between distinct constants kept: " + render_rule(cur));
  } else {
    out.rules.push_back(cur);
  }
  return out;
}

Rewrite eliminate_head_equalities(const Rule& r) {
  if (r.heads.size() != 1) throw std::invalid_argument("eliminate_head_equalities: expects one head disjunct");
  HeadDisjunct h = r.heads[0];
  auto is_ex = [&](const Term& t) {
    return t.is_var() && std::find(h.exvars.begin(), h.exvars.end(), t.name) != h.exvars.end();
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < h.atoms.size(); ++i) {
      const Atom& a = h.atoms[i];
      if (!a.is_eq()) continue;
      Term l = a.args[0], rt = a.args[1];
      if (l != rt && !is_ex(l) && !is_ex(rt)) continue;
      h.atoms.erase(h.atoms.begin() + static_cast<std::ptrdiff_t>(i));
      if (l != rt) {
        if (!is_ex(l)) std::swap(l, rt);
        h.atoms = subst_atoms(h.atoms, {{l.name, rt}});
        h.exvars.erase(std::find(h.exvars.begin(), h.exvars.end(), l.name));
      }
      changed = true;
      break;
    }
  }
  Rewrite out;
  HeadDisjunct main{{}, {}};
  for (const auto& a : h.atoms) {
    if (a.is_eq()) {
      Rule egd{r.body, {HeadDisjunct{{}, {a}}}, r.label};
      push_unique(out.residuals, egd);
      out.notes.push_back("equality head kept as EGD: " + render_rule(egd));
    } else {
      main.atoms.push_back(a);
    }
  }
  main.exvars = live_exvars(h.exvars, main.atoms);
  if (!main.atoms.empty()) out.rules.push_back(Rule{r.body, {main}, r.label});
  else if (out.residuals.empty()) out.notes.push_back("head reduced to true; rule dropped: " + render_rule(r));
  return out;
}

Rewrite ed_to_tgd_normal(const std::vector<Rule>& rules, const Budget& budget) {
  Rewrite out;
  for (const auto& r : rules) {
    if (r.heads.size() != 1) throw std::invalid_argument("not an ED: " + render_rule(r));
    Rewrite b = eliminate_body_equalities(r);
    out.notes.insert(out.notes.end(), b.notes.begin(), b.notes.end());
    for (const auto& x : b.residuals) push_unique(out.residuals, x);
    for (const auto& x : b.rules) {
      Rewrite hh = eliminate_head_equalities(x);
      out.notes.insert(out.notes.end(), hh.notes.begin(), hh.notes.end());
      for (const auto& y : hh.rules) push_unique(out.rules, y);
      for (const auto& y : hh.residuals) push_unique(out.residuals, y);
    }
  }
  out.report = bounded_equivalence(rules, out.all(), budget.max_domain);
  return out;
}

// ------------------------------------------------------------ trivial/sharp

bool has_trivial_model(const std::vector<Rule>& rules) {
  Structure t = trivial_structure(signature_of(rules));
  return std::all_of(rules.begin(), rules.end(), [&](const Rule& r) { return satisfies_rule(t, r); });
}

bool has_sharp_model(const std::vector<Rule>& rules) {
  Structure s = sharp_structure(signature_of(rules));
  return std::all_of(rules.begin(), rules.end(), [&](const Rule& r) { return satisfies_rule(s, r); });
}

bool gd_to_ded_decidable(const std::vector<Rule>& rules) {
  return has_trivial_model(rules) && has_sharp_model(rules);
}

// ------------------------------------------------------------------ diverse

F diverse_to_formula(const DiverseDependency& d) {
  std::vector<F> guard;
  for (std::size_t i = 0; i < d.una_terms.size(); ++i)
    for (std::size_t j = i + 1; j < d.una_terms.size(); ++j)
      guard.push_back(fo::neg(fo::eq(d.una_terms[i], d.una_terms[j])));
  guard.push_back(fo::conj_atoms(d.base.body));
  std::vector<F> heads;
  for (const auto& h : d.base.heads) heads.push_back(fo::exists(h.exvars, fo::conj_atoms(h.atoms)));
  auto u = universal_vars(d.base);
  F head = heads.empty() ? fo::bot() : fo::disj(heads);
  return fo::forall(std::vector<std::string>(u.begin(), u.end()), fo::implies(fo::conj(guard), head));
}

std::string render_diverse(const DiverseDependency& d) {
  std::string out = "una(";
  for (std::size_t i = 0; i < d.una_terms.size(); ++i) out += (i ? "," : "") + render_term(d.una_terms[i]);
  return out + ") :: " + render_rule(d.base);
}

DiverseNormal normalize_diverse(const Rule& r) {
  if (!classify(r).has(Flag::TGD)) throw std::invalid_argument("normalize_diverse: not a TGD: " + render_rule(r));
  std::vector<Term> terms;
  for (const auto& c : rule_constants(r)) terms.push_back(Term::cst(c));
  for (const auto& v : universal_vars(r)) terms.push_back(Term::var(v));
  const int n = static_cast<int>(terms.size());

  DiverseNormal out;
  std::vector<int> block(n, 0);
  std::function<void(int, int)> rec = [&](int i, int k) {
    if (i < n) {
      for (int b = 0; b <= k; ++b) {
        block[i] = b;
        rec(i + 1, std::max(k, b + 1));
      }
      return;
    }
    // Constants come first in `terms`, so the first member of a block is the preferred representative.
    std::vector<int> rep(k, -1);
    std::map<std::string, Term> m;
    std::vector<Atom> const_eqs;
    for (int j = 0; j < n; ++j) {
      int b = block[j];
      if (rep[b] < 0) {
        rep[b] = j;
        continue;
      }
      const Term& r0 = terms[rep[b]];
      if (terms[j].is_var()) m[terms[j].name] = r0;
      else const_eqs.push_back(Atom::equality(r0, terms[j]));
    }
    Rule base = subst_universal(r, m);
    if (!const_eqs.empty()) {
      base.body.insert(base.body.end(), const_eqs.begin(), const_eqs.end());
      push_unique(out.residuals, base);
      return;
    }
    DiverseDependency d{base, {}};
    for (int b = 0; b < k; ++b) d.una_terms.push_back(terms[rep[b]]);
    push_unique(out.deps, d);
  };
  rec(0, 0);
  return out;
}

HeadGraph head_graph(const Rule& r) {
  HeadGraph g;
  if (r.heads.empty()) return g;
  const auto& h = r.heads.front();
  for (const auto& a : h.atoms)
    if (a.is_rel()) g.vertices.push_back(a);
  const int n = static_cast<int>(g.vertices.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool share = false;
      for (const auto& e : h.exvars)
        if (mentions({g.vertices[i]}, e) && mentions({g.vertices[j]}, e)) share = true;
      if (share) g.edges.push_back({i, j});
    }
  std::vector<int> comp(n, -1);
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    int id = static_cast<int>(g.components.size());
    g.components.push_back({});
    std::vector<int> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      g.components[id].push_back(v);
      for (auto [a, b] : g.edges) {
        int w = a == v ? b : b == v ? a : -1;
        if (w >= 0 && comp[w] < 0) {
          comp[w] = id;
          stack.push_back(w);
        }
      }
    }
    std::sort(g.components[id].begin(), g.components[id].end());
  }
  return g;
}

HeadGraph head_graph(const DiverseDependency& d) { return head_graph(d.base); }

bool is_quasi_frontier_guarded(const DiverseDependency& d) {
  const Rule& r = d.base;
  if (r.heads.empty()) return true;
  const auto& ex = r.heads.front().exvars;
  HeadGraph g = head_graph(r);
  for (const auto& comp : g.components) {
    std::set<std::string> u;
    for (int i : comp)
      for (const auto& t : g.vertices[i].args)
        if (t.is_var() && std::find(ex.begin(), ex.end(), t.name) == ex.end()) u.insert(t.name);
    if (u.empty()) continue;
    bool ok = false;
    for (const auto& b : r.body) {
      if (!b.is_rel()) continue;
      std::set<std::string> bv;
      for (const auto& t : b.args)
        if (t.is_var()) bv.insert(t.name);
      if (std::includes(bv.begin(), bv.end(), u.begin(), u.end())) ok = true;
    }
    if (!ok) return false;
  }
  return true;
}

DiverseDependency apply_substitution(const DiverseDependency& d, const Substitution& s) {
  DiverseDependency out = d;
  if (out.base.heads.empty()) return out;
  auto& h = out.base.heads.front();
  std::map<std::string, Term> m;
  for (const auto& [k, v] : s)
    if (std::find(h.exvars.begin(), h.exvars.end(), k) != h.exvars.end()) m[k] = v;
  h.atoms = subst_atoms(h.atoms, m);
  h.exvars = live_exvars(h.exvars, h.atoms);
  return out;
}

std::vector<Substitution> specialization_set(const DiverseDependency& d, std::uint64_t cap) {
  if (d.base.heads.size() != 1) throw std::invalid_argument("specialization_set: expects one head disjunct");
  const auto& ex = d.base.heads.front().exvars;
  std::vector<Term> others;
  for (const auto& v : universal_vars(d.base)) others.push_back(Term::var(v));
  for (const auto& c : rule_constants(d.base)) others.push_back(Term::cst(c));
  // Candidates per variable: itself, the other existentials, universals, constants.
  std::vector<std::vector<Term>> cand;
  std::uint64_t total = 1;
  for (const auto& y : ex) {
    std::vector<Term> c{Term::var(y)};
    for (const auto& z : ex)
      if (z != y) c.push_back(Term::var(z));
    c.insert(c.end(), others.begin(), others.end());
    if (total > cap / c.size()) throw std::length_error("specialization_set: candidate count exceeds cap");
    total *= c.size();
    cand.push_back(std::move(c));
  }
  if (total > cap) throw std::length_error("specialization_set: candidate count exceeds cap");
  std::vector<Substitution> out;
  std::vector<std::size_t> idx(ex.size(), 0);
  for (;;) {
    Substitution s;
    for (std::size_t i = 0; i < ex.size(); ++i) s[ex[i]] = cand[i][idx[i]];
    if (is_quasi_frontier_guarded(apply_substitution(d, s))) out.push_back(s);
    std::size_t i = ex.size();
    while (i > 0 && ++idx[i - 1] == cand[i - 1].size()) idx[--i] = 0;
    if (i == 0) break;
  }
  return out;
}

F gamma_star(const DiverseDependency& d, const std::vector<Substitution>& s) {
  std::vector<F> guard;
  for (std::size_t i = 0; i < d.una_terms.size(); ++i)
    for (std::size_t j = i + 1; j < d.una_terms.size(); ++j)
      guard.push_back(fo::neg(fo::eq(d.una_terms[i], d.una_terms[j])));
  guard.push_back(fo::conj_atoms(d.base.body));
  std::vector<F> heads;
  for (const auto& sub : s) {
    const HeadDisjunct h = apply_substitution(d, sub).base.heads.front();
    heads.push_back(fo::exists(h.exvars, fo::conj_atoms(h.atoms)));
  }
  auto u = universal_vars(d.base);
  return fo::forall(std::vector<std::string>(u.begin(), u.end()),
                    fo::implies(fo::conj(guard), heads.empty() ? fo::bot() : fo::disj(heads)));
}

Rule gamma_dagger(const DiverseDependency& d, const std::vector<Substitution>& s) {
  Rule out{d.base.body, {}, d.base.label};
  for (const auto& sub : s) push_unique(out.heads, apply_substitution(d, sub).base.heads.front());
  for (std::size_t i = 0; i < d.una_terms.size(); ++i)
    for (std::size_t j = i + 1; j < d.una_terms.size(); ++j)
      out.heads.push_back({{}, {Atom::equality(d.una_terms[i], d.una_terms[j])}});
  return out;
}

std::vector<Rule> delta_set(const DiverseDependency& d, const std::vector<Substitution>& s) {
  std::vector<Rule> out;
  for (const auto& sub : s) out.push_back(Rule{d.base.body, {apply_substitution(d, sub).base.heads.front()}, d.base.label});
  return out;
}

std::vector<Rule> qfg_to_frontier_guarded(const Rule& r) {
  if (!classify(r).has(Flag::TGD)) throw std::invalid_argument("qfg_to_frontier_guarded: not a TGD: " + render_rule(r));
  if (!is_quasi_frontier_guarded(DiverseDependency{r, {}}))
    throw std::invalid_argument("qfg_to_frontier_guarded: not quasi-frontier-guarded: " + render_rule(r));
  HeadGraph g = head_graph(r);
  std::vector<Rule> out;
  for (const auto& comp : g.components) {
    HeadDisjunct h;
    for (int i : comp) h.atoms.push_back(g.vertices[i]);
    h.exvars = live_exvars(r.heads.front().exvars, h.atoms);
    push_unique(out, Rule{r.body, {h}, r.label});
  }
  return out;
}

Rewrite tgd_to_fgtgd_bounded(const std::vector<Rule>& rules, const Budget& budget, std::uint64_t specialization_cap) {
  for (const auto& r : rules)
    if (!classify(r).has(Flag::TGD)) throw std::invalid_argument("tgd_to_fgtgd_bounded: not a TGD: " + render_rule(r));
  Rewrite out;
  std::vector<DiverseDependency> deps;
  for (const auto& r : rules) {
    DiverseNormal nd = normalize_diverse(r);
    for (const auto& d : nd.deps) push_unique(deps, d);
    for (const auto& x : nd.residuals) push_unique(out.residuals, x);
  }
  std::vector<Rule> dagger = out.residuals;
  std::vector<Rule> delta;
  for (const auto& d : deps) {
    auto s = specialization_set(d, specialization_cap);
    if (s.empty()) out.notes.push_back("empty specialization set: " + render_diverse(d));
    dagger.push_back(gamma_dagger(d, s));
    for (const auto& x : delta_set(d, s)) push_unique(delta, x);
  }
  for (const auto& x : delta) {
    const auto& h = x.heads.front();
    bool tautology = h.exvars.empty() && std::all_of(h.atoms.begin(), h.atoms.end(), [&](const Atom& a) {
      return std::find(x.body.begin(), x.body.end(), a) != x.body.end();
    });
    if (tautology || entails_bounded(dagger, x, budget).refuted) continue;
    for (const auto& fg : qfg_to_frontier_guarded(x)) push_unique(out.rules, fg);
  }
  // A diverse branch over k terms is vacuous below size k, so the check is
  // widened to the largest branch when that stays cheap.
  int bound = budget.max_domain;
  std::size_t widest = 0;
  for (const auto& d : deps) widest = std::max(widest, d.una_terms.size());
  Signature sig = signature_of(rules);
  sig.merge(signature_of(out.all()));
  if (static_cast<int>(widest) > bound && count_structures(sig, static_cast<int>(widest)) <= (1u << 22)) {
    out.notes.push_back("equivalence checked up to the widest branch size " + std::to_string(widest));
    bound = static_cast<int>(widest);
  }
  out.report = bounded_equivalence(rules, out.all(), bound);
  return out;
}

std::string write_rewrite_report(const std::string& target, const RuleSet& input, const Rewrite& rw) {
  std::string out = "# rewrite target: " + target + "\n";
  if (rw.report) {
    const auto& r = *rw.report;
    out += "# equivalence: " + std::string(r.equivalent ? "verified" : "FAILED") + " up to size " +
           std::to_string(r.max_domain) + " (" + std::to_string(r.structures) + " structures" +
           (r.capped ? ", capped" : "") + ")\n";
  } else {
    out += "# equivalence: not checked\n";
  }
  for (const auto& n : rw.notes) out += "# note: " + n + "\n";
  auto section = [&](const std::string& name, const std::vector<Rule>& rs) {
    out += "# --- " + name + "\n";
    for (const auto& r : rs) out += render_rule(r) + "\n";
  };
  section("input", input.rules);
  section("output", rw.rules);
  section("residuals", rw.residuals);
  if (rw.report && rw.report->witness) {
    out += std::string("# --- witness (model of ") + (rw.report->witness_models_input ? "input" : "output") +
           " only)\n" + write_structure(*rw.report->witness);
  }
  return out;
}

}  // namespace exr
