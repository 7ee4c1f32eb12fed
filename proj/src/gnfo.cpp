#include "exrules/gnfo.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace exr {

namespace {

using K = Formula::Kind;

std::set<std::string> atom_vars(const Formula& f) {
  std::set<std::string> out;
  for (const auto& t : f.args)
    if (t.is_var()) out.insert(t.name);
  return out;
}

void flatten_and(const F& f, std::vector<F>& out) {
  if (f->kind == K::And) {
    for (const auto& k : f->kids) flatten_and(k, out);
  } else {
    out.push_back(f);
  }
}

F d_atom(Side s, const Term& t) { return fo::atom(side_relation(s), {t}); }

// True when f can only hold with v inside D.
bool bounds(const F& f, const std::string& v, const std::string& d) {
  switch (f->kind) {
    case K::Atom:
      return f->rel == d && f->args.size() == 1 && f->args[0].is_var() && f->args[0].name == v;
    case K::And:
      return std::any_of(f->kids.begin(), f->kids.end(), [&](const F& k) { return bounds(k, v, d); });
    case K::Or:
      return !f->kids.empty() &&
             std::all_of(f->kids.begin(), f->kids.end(), [&](const F& k) { return bounds(k, v, d); });
    case K::Exists:
      return std::find(f->vars.begin(), f->vars.end(), v) == f->vars.end() && bounds(f->kids[0], v, d);
    default:
      return false;
  }
}

// Relations of arity >= 2; smaller ones are covered by theta alone.
std::vector<std::pair<std::string, int>> tau_relations(const Signature& sig) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& [r, ar] : sig.relations)
    if (ar >= 2) out.push_back({r, ar});
  return out;
}

std::string side_copy(const std::string& r, Side s) { return r + (s == Side::A ? "__A" : "__B"); }

// A disjoint union keeps nullary facts per side, so each side reads its own copy.
F split_nullary(const F& f, Side s) {
  if (f->kind == K::Atom) return f->args.empty() ? fo::atom(side_copy(f->rel, s), {}) : f;
  if (f->kids.empty()) return f;
  auto out = std::make_shared<Formula>(*f);
  for (auto& k : out->kids) k = split_nullary(k, s);
  return out;
}

}  // namespace

bool is_gnfo(const F& f) {
  switch (f->kind) {
    case K::Atom:
    case K::Eq:
    case K::True:
    case K::False:
      return true;
    case K::Exists:
      return is_gnfo(f->kids[0]);
    case K::Or:
      return std::all_of(f->kids.begin(), f->kids.end(), [](const F& k) { return is_gnfo(k); });
    case K::And: {
      std::vector<F> parts;
      flatten_and(f, parts);
      for (const auto& p : parts) {
        if (p->kind != K::Not) {
          if (!is_gnfo(p)) return false;
          continue;
        }
        const F& inner = p->kids[0];
        auto fv = free_vars(inner);
        bool guarded = std::any_of(parts.begin(), parts.end(), [&](const F& g) {
          if (g->kind != K::Atom && g->kind != K::Eq) return false;
          auto gv = atom_vars(*g);
          return std::includes(gv.begin(), gv.end(), fv.begin(), fv.end());
        });
        if (!guarded || !is_gnfo(inner)) return false;
      }
      return true;
    }
    case K::Not:
    case K::Implies:
    case K::Forall:
      return false;
  }
  return false;
}

F to_basic_connectives(const F& f) {
  switch (f->kind) {
    case K::Atom:
    case K::Eq:
    case K::True:
    case K::False:
      return f;
    case K::Not:
      return fo::neg(to_basic_connectives(f->kids[0]));
    case K::And:
    case K::Or: {
      std::vector<F> ks;
      for (const auto& k : f->kids) ks.push_back(to_basic_connectives(k));
      return f->kind == K::And ? fo::conj(ks) : fo::disj(ks);
    }
    case K::Implies:
      return fo::disj({fo::neg(to_basic_connectives(f->kids[0])), to_basic_connectives(f->kids[1])});
    case K::Exists:
      return fo::exists(f->vars, to_basic_connectives(f->kids[0]));
    case K::Forall:
      return fo::neg(fo::exists(f->vars, fo::neg(to_basic_connectives(f->kids[0]))));
  }
  return f;
}

const char* side_relation(Side s) { return s == Side::A ? "D_A" : "D_B"; }

F relativize(const F& f, Side s) {
  switch (f->kind) {
    case K::Atom:
    case K::Eq: {
      std::vector<F> parts{f};
      std::vector<Term> seen;
      for (const auto& t : f->args)
        if (std::find(seen.begin(), seen.end(), t) == seen.end()) {
          seen.push_back(t);
          parts.push_back(d_atom(s, t));
        }
      return parts.size() == 1 ? f : fo::conj(parts);
    }
    case K::True:
    case K::False:
      return f;
    case K::Not:
      return fo::neg(relativize(f->kids[0], s));
    case K::And:
    case K::Or: {
      std::vector<F> ks;
      for (const auto& k : f->kids) ks.push_back(relativize(k, s));
      return f->kind == K::And ? fo::conj(ks) : fo::disj(ks);
    }
    case K::Exists: {
      F body = relativize(f->kids[0], s);
      std::vector<F> guards;
      for (const auto& v : f->vars)
        if (!bounds(body, v, side_relation(s))) guards.push_back(d_atom(s, Term::var(v)));
      if (!guards.empty()) {
        guards.push_back(body);
        body = fo::conj(guards);
      }
      return fo::exists(f->vars, body);
    }
    case K::Implies:
      throw std::invalid_argument("relativize: implication must be compiled away first");
    case K::Forall:
      throw std::invalid_argument("relativize: universal quantifier must be compiled away first");
  }
  return f;
}

Reduction disjoint_union_reduction(const F& f, const Signature& tau) {
  if (!is_sentence(f)) throw std::invalid_argument("disjoint_union_reduction: input has free variables");
  Signature sig = tau;
  sig.merge(formula_signature(f));
  for (Side s : {Side::A, Side::B})
    if (sig.arity(side_relation(s)) >= 0)
      throw std::invalid_argument(std::string("disjoint_union_reduction: reserved name in use: ") + side_relation(s));
  Reduction out;
  out.sig = sig;
  out.sig.add_relation("D_A", 1);
  out.sig.add_relation("D_B", 1);
  std::vector<std::string> nullary;
  for (const auto& [r, ar] : sig.relations)
    if (ar == 0) nullary.push_back(r);
  for (const auto& r : nullary)
    for (Side s : {Side::A, Side::B}) {
      if (sig.arity(side_copy(r, s)) >= 0)
        throw std::invalid_argument("disjoint_union_reduction: reserved name in use: " + side_copy(r, s));
      out.sig.add_relation(side_copy(r, s), 0);
    }
  if (!nullary.empty()) out.notes.push_back("nullary relations are split into per-side copies");

  const F da = d_atom(Side::A, Term::var("x")), db = d_atom(Side::B, Term::var("x"));
  F theta = fo::forall({"x"}, fo::disj({da, db}));
  // Both sides must hold every constant, as a structure's domain does.
  std::vector<F> consts;
  for (const auto& c : sig.constants) {
    consts.push_back(d_atom(Side::A, Term::cst(c)));
    consts.push_back(d_atom(Side::B, Term::cst(c)));
  }
  if (!consts.empty()) out.notes.push_back("constants are placed in both D_A and D_B");

  // Every fact of C must lie inside D_A or inside D_B, or C|tau is larger than
  // the union of the two induced substructures.
  std::vector<F> cover, cover_g;
  for (const auto& [r, ar] : tau_relations(sig)) {
    std::vector<Term> xs;
    std::vector<std::string> names;
    std::vector<F> ina, inb;
    for (int i = 0; i < ar; ++i) {
      names.push_back("x" + std::to_string(i + 1));
      xs.push_back(Term::var(names.back()));
      ina.push_back(d_atom(Side::A, xs.back()));
      inb.push_back(d_atom(Side::B, xs.back()));
    }
    F fact = fo::atom(r, xs);
    F inside = fo::disj({fo::conj(ina), fo::conj(inb)});
    cover.push_back(fo::forall(names, fo::implies(fact, inside)));
    cover_g.push_back(fo::neg(fo::exists(names, fo::conj({fact, fo::neg(inside)}))));
  }
  for (const auto& r : nullary) {
    F fact = fo::atom(r, {}), fa = fo::atom(side_copy(r, Side::A), {}), fb = fo::atom(side_copy(r, Side::B), {});
    cover.push_back(fo::conj({fo::implies(fact, fo::disj({fa, fb})), fo::implies(fo::disj({fa, fb}), fact)}));
    cover_g.push_back(fo::neg(fo::conj({fact, fo::neg(fo::disj({fa, fb}))})));
    cover_g.push_back(fo::neg(fo::conj({fa, fo::neg(fact)})));
    cover_g.push_back(fo::neg(fo::conj({fb, fo::neg(fact)})));
  }

  F basic = to_basic_connectives(f);
  F pa = relativize(split_nullary(basic, Side::A), Side::A), pb = relativize(split_nullary(basic, Side::B), Side::B);
  std::vector<F> parts{theta};
  parts.insert(parts.end(), cover.begin(), cover.end());
  parts.insert(parts.end(), consts.begin(), consts.end());
  parts.push_back(pa);
  parts.push_back(pb);
  parts.push_back(fo::neg(f));
  out.sentence = fo::conj(parts);

  if (!is_gnfo(f)) {
    out.notes.push_back("input is not GNFO-shaped; no GNFO form attempted");
    return out;
  }
  auto wrap = [](const std::string& v, F inner) {  // exists v (v=v and not inner)
    return fo::exists({v}, fo::conj({fo::eq(Term::var(v), Term::var(v)), fo::neg(std::move(inner))}));
  };
  F theta_g = wrap("y", fo::exists({"x"}, fo::conj({fo::eq(Term::var("x"), Term::var("x")),
                                                    fo::neg(fo::disj({da, db}))})));
  std::vector<F> gparts{theta_g};
  for (const auto& c : cover_g) gparts.push_back(wrap("w", c->kids[0]));
  gparts.insert(gparts.end(), consts.begin(), consts.end());
  gparts.push_back(relativize(split_nullary(f, Side::A), Side::A));
  gparts.push_back(relativize(split_nullary(f, Side::B), Side::B));
  gparts.push_back(wrap("w", f));
  out.gnfo_form = fo::conj(gparts);
  out.gnfo_certified = is_gnfo(*out.gnfo_form);
  out.notes.push_back(out.gnfo_certified ? "GNFO form certified" : "GNFO form failed certification");
  return out;
}

Reduction disjoint_union_reduction(const F& f) { return disjoint_union_reduction(f, Signature{}); }

std::optional<Structure> bounded_sat(const F& f, int max_domain, const Signature& extra, std::uint64_t cap) {
  if (!is_sentence(f)) throw std::invalid_argument("bounded_sat: input has free variables");
  Signature sig = extra;
  sig.merge(formula_signature(f));
  CompiledTheory ct(make_theory(sig, {}, {f}));
  std::optional<Structure> found;
  std::uint64_t left = cap;
  for (int n = 1; n <= max_domain && !found; ++n) {
    auto st = ct.enumerate_models(
        iota_domain(n),
        [&](const Structure& s) {
          found = s;
          return false;
        },
        left);
    if (st.capped && !found) throw std::length_error("bounded_sat: structure cap reached");
    left -= std::min(left, st.emitted);
  }
  return found;
}

F rules_to_sentence(const std::vector<Rule>& rules) {
  if (rules.empty()) return fo::top();
  std::vector<F> parts;
  for (const auto& r : rules) parts.push_back(rule_to_formula(r));
  return fo::conj(parts);
}

GnfoFormula fg_rules_to_gnfo(const std::vector<Rule>& rules) {
  std::vector<F> parts;
  for (const auto& r : rules) {
    auto cls = classify(r);
    if (!cls.has(Flag::TGD) || !cls.has(Flag::FrontierGuarded))
      throw std::invalid_argument("fg_rules_to_gnfo: not a frontier-guarded TGD: " + render_rule(r));
    std::size_t g = *guard_index(r);
    std::vector<F> body{fo::atom(r.body[g])};
    for (std::size_t i = 0; i < r.body.size(); ++i)
      if (i != g) body.push_back(fo::atom(r.body[i]));
    const auto& h = r.heads.front();
    body.push_back(fo::neg(fo::exists(h.exvars, fo::conj_atoms(h.atoms))));
    auto u = universal_vars(r);
    F inner = fo::exists(std::vector<std::string>(u.begin(), u.end()), fo::conj(body));
    parts.push_back(fo::exists({"w"}, fo::conj({fo::eq(Term::var("w"), Term::var("w")), fo::neg(inner)})));
  }
  GnfoFormula out;
  out.ast = parts.empty() ? fo::top() : fo::conj(parts);
  out.gnfo_certified = is_gnfo(out.ast);
  return out;
}

}  // namespace exr
