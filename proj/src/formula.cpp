#include "exrules/formula.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>

namespace exr {

namespace fo {

namespace {
F make(Formula f) { return std::make_shared<const Formula>(std::move(f)); }
}  // namespace

F atom(std::string rel, std::vector<Term> args) {
  Formula f;
  f.kind = Formula::Kind::Atom;
  f.rel = std::move(rel);
  f.args = std::move(args);
  return make(std::move(f));
}

F atom(const Atom& a) {
  if (a.is_eq()) return eq(a.args[0], a.args[1]);
  if (a.kind == Atom::Kind::False) return bot();
  return atom(a.rel, a.args);
}

F eq(Term l, Term r) {
  Formula f;
  f.kind = Formula::Kind::Eq;
  f.args = {std::move(l), std::move(r)};
  return make(std::move(f));
}

F top() { return make(Formula{Formula::Kind::True, {}, {}, {}, {}}); }
F bot() { return make(Formula{Formula::Kind::False, {}, {}, {}, {}}); }

F neg(F x) { return make(Formula{Formula::Kind::Not, {}, {}, {std::move(x)}, {}}); }

F conj(std::vector<F> fs) {
  if (fs.size() == 1) return fs[0];
  return make(Formula{Formula::Kind::And, {}, {}, std::move(fs), {}});
}

F disj(std::vector<F> fs) {
  if (fs.size() == 1) return fs[0];
  return make(Formula{Formula::Kind::Or, {}, {}, std::move(fs), {}});
}

F implies(F l, F r) { return make(Formula{Formula::Kind::Implies, {}, {}, {std::move(l), std::move(r)}, {}}); }

F exists(std::vector<std::string> vars, F body) {
  if (vars.empty()) return body;
  return make(Formula{Formula::Kind::Exists, {}, {}, {std::move(body)}, std::move(vars)});
}

F forall(std::vector<std::string> vars, F body) {
  if (vars.empty()) return body;
  return make(Formula{Formula::Kind::Forall, {}, {}, {std::move(body)}, std::move(vars)});
}

F conj_atoms(const std::vector<Atom>& atoms) {
  std::vector<F> fs;
  for (const auto& a : atoms) fs.push_back(atom(a));
  if (fs.empty()) return top();
  return conj(std::move(fs));
}

Term v(std::string n) { return Term::var(std::move(n)); }
Term c(std::string n) { return Term::cst(std::move(n)); }

}  // namespace fo

namespace {

void free_rec(const F& f, std::set<std::string>& bound, std::set<std::string>& out) {
  using K = Formula::Kind;
  switch (f->kind) {
    case K::Atom:
    case K::Eq:
      for (const auto& t : f->args)
        if (t.is_var() && !bound.count(t.name)) out.insert(t.name);
      return;
    case K::Exists:
    case K::Forall: {
      std::vector<std::string> added;
      for (const auto& v : f->vars)
        if (bound.insert(v).second) added.push_back(v);
      free_rec(f->kids[0], bound, out);
      for (const auto& v : added) bound.erase(v);
      return;
    }
    default:
      for (const auto& k : f->kids) free_rec(k, bound, out);
  }
}

void sig_rec(const F& f, Signature& sig) {
  if (f->kind == Formula::Kind::Atom) sig.add_relation(f->rel, static_cast<int>(f->args.size()));
  for (const auto& t : f->args)
    if (t.is_const()) sig.add_constant(t.name);
  for (const auto& k : f->kids) sig_rec(k, sig);
}

class Evaluator {
 public:
  Evaluator(const Structure& s, Assignment asg) : s_(s), asg_(std::move(asg)) {}

  bool run(const F& f) {
    using K = Formula::Kind;
    switch (f->kind) {
      case K::True: return true;
      case K::False: return false;
      case K::Atom: {
        auto it = s_.rel.find(f->rel);
        if (it == s_.rel.end() || s_.sig.arity(f->rel) != static_cast<int>(f->args.size()))
          throw std::invalid_argument("symbol mismatch: " + f->rel);
        Tuple t(f->args.size());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = value(f->args[i]);
        return it->second.count(t) > 0;
      }
      case K::Eq: return value(f->args[0]) == value(f->args[1]);
      case K::Not: return !run(f->kids[0]);
      case K::And:
        for (const auto& k : f->kids)
          if (!run(k)) return false;
        return true;
      case K::Or:
        for (const auto& k : f->kids)
          if (run(k)) return true;
        return false;
      case K::Implies: return !run(f->kids[0]) || run(f->kids[1]);
      case K::Exists: return quant(f, 0, true);
      case K::Forall: return quant(f, 0, false);
    }
    return false;
  }

 private:
  Elem value(const Term& t) const {
    if (t.is_const()) {
      auto it = s_.cst.find(t.name);
      if (it == s_.cst.end()) throw std::invalid_argument("unknown constant: " + t.name);
      return it->second;
    }
    auto it = asg_.find(t.name);
    if (it == asg_.end()) throw std::invalid_argument("unbound variable: " + t.name);
    return it->second;
  }

  bool quant(const F& f, std::size_t i, bool existential) {
    if (i == f->vars.size()) return run(f->kids[0]);
    const std::string& v = f->vars[i];
    auto prev = asg_.find(v);
    std::optional<Elem> saved;
    if (prev != asg_.end()) saved = prev->second;
    bool result = !existential;
    for (Elem e : s_.domain) {
      asg_[v] = e;
      bool r = quant(f, i + 1, existential);
      if (r == existential) {
        result = existential;
        break;
      }
    }
    if (saved) asg_[v] = *saved;
    else asg_.erase(v);
    return result;
  }

  const Structure& s_;
  Assignment asg_;
};

}  // namespace

std::set<std::string> free_vars(const F& f) {
  std::set<std::string> bound, out;
  free_rec(f, bound, out);
  return out;
}

bool is_sentence(const F& f) { return free_vars(f).empty(); }

bool formula_equal(const F& a, const F& b) {
  if (a == b) return true;
  if (a->kind != b->kind || a->rel != b->rel || a->args != b->args || a->vars != b->vars ||
      a->kids.size() != b->kids.size())
    return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!formula_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

Signature formula_signature(const F& f) {
  Signature sig;
  sig_rec(f, sig);
  return sig;
}

std::vector<F> top_conjuncts(const F& f) {
  if (f->kind != Formula::Kind::And) return {f};
  std::vector<F> out;
  for (const auto& k : f->kids) {
    auto sub = top_conjuncts(k);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

bool eval(const Structure& s, const F& f, const Assignment& asg) {
  for (const auto& [v, e] : asg)
    if (!s.in_domain(e)) throw std::invalid_argument("assignment leaves the domain: " + v);
  return Evaluator(s, asg).run(f);
}

// ------------------------------------------------------------ compiled form

struct CompiledFormula::Ctx {
  std::size_t n = 0;
  std::vector<std::vector<char>> tables;  // per relation, tuple code -> present
  std::vector<int> consts;                // domain positions
  std::vector<int> val;                   // slot -> domain position
};

CompiledFormula::CompiledFormula(const F& f) {
  if (!is_sentence(f)) throw std::invalid_argument("CompiledFormula: input has free variables");
  std::map<std::string, int> scope;
  root_ = compile(f, scope);
}

int CompiledFormula::compile(const F& f, std::map<std::string, int>& scope) {
  using K = Formula::Kind;
  Node n;
  n.kind = f->kind;
  auto term = [&](const Term& t) {
    if (t.is_var()) return scope.at(t.name);
    auto it = std::find(consts_.begin(), consts_.end(), t.name);
    if (it == consts_.end()) it = consts_.insert(consts_.end(), t.name);
    return -static_cast<int>(it - consts_.begin()) - 1;
  };
  if (f->kind == K::Atom) {
    auto it = std::find(rels_.begin(), rels_.end(), f->rel);
    if (it == rels_.end()) {
      it = rels_.insert(rels_.end(), f->rel);
      arity_.push_back(static_cast<int>(f->args.size()));
    } else if (arity_[it - rels_.begin()] != static_cast<int>(f->args.size())) {
      throw std::invalid_argument("CompiledFormula: arity clash on " + f->rel);
    }
    n.rel = static_cast<int>(it - rels_.begin());
  }
  for (const auto& t : f->args) n.args.push_back(term(t));
  if (f->kind == K::Exists || f->kind == K::Forall) {
    std::map<std::string, int> inner = scope;
    for (const auto& v : f->vars) {
      inner[v] = slots_;
      n.slots.push_back(slots_++);
    }
    n.kids.push_back(compile(f->kids[0], inner));
  } else {
    for (const auto& k : f->kids) n.kids.push_back(compile(k, scope));
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

bool CompiledFormula::holds(const Structure& s) const {
  Ctx c;
  c.n = s.domain.size();
  auto pos = [&](Elem e) {
    return static_cast<int>(std::lower_bound(s.domain.begin(), s.domain.end(), e) - s.domain.begin());
  };
  for (std::size_t r = 0; r < rels_.size(); ++r) {
    auto it = s.rel.find(rels_[r]);
    if (it == s.rel.end() || s.sig.arity(rels_[r]) != arity_[r])
      throw std::invalid_argument("symbol mismatch: " + rels_[r]);
    std::size_t size = 1;
    for (int i = 0; i < arity_[r]; ++i) {
      size *= c.n;
      if (size > (std::size_t{1} << 26)) throw std::length_error("CompiledFormula: relation table too large");
    }
    std::vector<char> table(size, 0);
    for (const auto& t : it->second) {
      std::size_t code = 0;
      for (Elem e : t) code = code * c.n + pos(e);
      table[code] = 1;
    }
    c.tables.push_back(std::move(table));
  }
  for (const auto& name : consts_) {
    auto it = s.cst.find(name);
    if (it == s.cst.end()) throw std::invalid_argument("unknown constant: " + name);
    c.consts.push_back(pos(it->second));
  }
  c.val.assign(slots_, 0);
  return run(root_, c);
}

bool CompiledFormula::run(int idx, Ctx& c) const {
  using K = Formula::Kind;
  const Node& n = nodes_[idx];
  auto value = [&](int a) { return a >= 0 ? c.val[a] : c.consts[-a - 1]; };
  switch (n.kind) {
    case K::True: return true;
    case K::False: return false;
    case K::Atom: {
      std::size_t code = 0;
      for (int a : n.args) code = code * c.n + value(a);
      return c.tables[n.rel][code] != 0;
    }
    case K::Eq: return value(n.args[0]) == value(n.args[1]);
    case K::Not: return !run(n.kids[0], c);
    case K::And:
      for (int k : n.kids)
        if (!run(k, c)) return false;
      return true;
    case K::Or:
      for (int k : n.kids)
        if (run(k, c)) return true;
      return false;
    case K::Implies: return !run(n.kids[0], c) || run(n.kids[1], c);
    case K::Exists: return quant(n, 0, true, c);
    case K::Forall: return quant(n, 0, false, c);
  }
  return false;
}

bool CompiledFormula::quant(const Node& n, std::size_t i, bool existential, Ctx& c) const {
  if (i == n.slots.size()) return run(n.kids[0], c);
  for (std::size_t e = 0; e < c.n; ++e) {
    c.val[n.slots[i]] = static_cast<int>(e);
    if (quant(n, i + 1, existential, c) == existential) return existential;
  }
  return !existential;
}

// ------------------------------------------------------------ prefix text

namespace {

std::string term_text(const Term& t) { return t.is_const() ? "\"" + t.name + "\"" : t.name; }

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {"and", "or", "not", "implies", "exists", "forall",
                                          "true", "false", "="};
  return k;
}

struct Sexp {
  bool list = false;
  bool quoted = false;
  std::string atom;
  std::vector<Sexp> items;
};

class SexpReader {
 public:
  explicit SexpReader(const std::string& s) : s_(s) {}

  bool at_end() {
    skip();
    return i_ >= s_.size();
  }

  Sexp read() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end of input");
    Sexp x;
    if (s_[i_] == '(') {
      ++i_;
      x.list = true;
      for (;;) {
        skip();
        if (i_ >= s_.size()) fail("missing ')'");
        if (s_[i_] == ')') {
          ++i_;
          break;
        }
        x.items.push_back(read());
      }
      return x;
    }
    if (s_[i_] == ')') fail("unexpected ')'");
    if (s_[i_] == '"') {
      auto j = s_.find('"', i_ + 1);
      if (j == std::string::npos) fail("unterminated string");
      x.quoted = true;
      x.atom = s_.substr(i_ + 1, j - i_ - 1);
      i_ = j + 1;
      return x;
    }
    std::size_t j = i_;
    while (j < s_.size() && !std::isspace(static_cast<unsigned char>(s_[j])) && s_[j] != '(' &&
           s_[j] != ')')
      ++j;
    x.atom = s_.substr(i_, j - i_);
    i_ = j;
    return x;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    int line = 1, col = 1;
    for (std::size_t k = 0; k < i_ && k < s_.size(); ++k) {
      if (s_[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(line, col, msg);
  }

 private:
  void skip() {
    for (;;) {
      while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ < s_.size() && s_[i_] == ';') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
        continue;
      }
      break;
    }
  }
  const std::string& s_;
  std::size_t i_ = 0;
};

Term to_term(const Sexp& x) {
  if (x.list) throw ParseError(0, 0, "expected a term");
  if (x.quoted) return Term::cst(x.atom);
  if (keywords().count(x.atom)) throw ParseError(0, 0, "keyword used as a term: " + x.atom);
  return Term::var(x.atom);
}

F to_formula(const Sexp& x) {
  if (!x.list) {
    if (x.atom == "true") return fo::top();
    if (x.atom == "false") return fo::bot();
    throw ParseError(0, 0, "expected a formula, got '" + x.atom + "'");
  }
  if (x.items.empty() || x.items[0].list || x.items[0].quoted) throw ParseError(0, 0, "bad formula head");
  const std::string& h = x.items[0].atom;
  auto kids = [&](std::size_t from) {
    std::vector<F> out;
    for (std::size_t i = from; i < x.items.size(); ++i) out.push_back(to_formula(x.items[i]));
    return out;
  };
  auto arity = [&](std::size_t n) {
    if (x.items.size() != n + 1) throw ParseError(0, 0, "wrong operand count for " + h);
  };
  if (h == "not") {
    arity(1);
    return fo::neg(to_formula(x.items[1]));
  }
  if (h == "and" || h == "or") {
    Formula f;
    f.kind = h == "and" ? Formula::Kind::And : Formula::Kind::Or;
    f.kids = kids(1);
    return std::make_shared<const Formula>(std::move(f));
  }
  if (h == "implies") {
    arity(2);
    return fo::implies(to_formula(x.items[1]), to_formula(x.items[2]));
  }
  if (h == "exists" || h == "forall") {
    arity(2);
    if (!x.items[1].list) throw ParseError(0, 0, "quantifier needs a variable list");
    std::vector<std::string> vars;
    for (const auto& v : x.items[1].items) {
      if (v.list || v.quoted) throw ParseError(0, 0, "bad bound variable");
      vars.push_back(v.atom);
    }
    Formula f;
    f.kind = h == "exists" ? Formula::Kind::Exists : Formula::Kind::Forall;
    f.vars = std::move(vars);
    f.kids = {to_formula(x.items[2])};
    return std::make_shared<const Formula>(std::move(f));
  }
  if (h == "=") {
    arity(2);
    return fo::eq(to_term(x.items[1]), to_term(x.items[2]));
  }
  if (keywords().count(h)) throw ParseError(0, 0, "misplaced keyword " + h);
  std::vector<Term> args;
  for (std::size_t i = 1; i < x.items.size(); ++i) args.push_back(to_term(x.items[i]));
  return fo::atom(h, std::move(args));
}

void prefix_rec(const F& f, std::string& out) {
  using K = Formula::Kind;
  switch (f->kind) {
    case K::True: out += "true"; return;
    case K::False: out += "false"; return;
    case K::Atom:
      out += "(" + f->rel;
      for (const auto& t : f->args) out += " " + term_text(t);
      out += ")";
      return;
    case K::Eq:
      out += "(= " + term_text(f->args[0]) + " " + term_text(f->args[1]) + ")";
      return;
    case K::Exists:
    case K::Forall: {
      out += f->kind == K::Exists ? "(exists (" : "(forall (";
      for (std::size_t i = 0; i < f->vars.size(); ++i) {
        if (i) out += " ";
        out += f->vars[i];
      }
      out += ") ";
      prefix_rec(f->kids[0], out);
      out += ")";
      return;
    }
    default: break;
  }
  const char* op = f->kind == K::Not ? "not" : f->kind == K::And ? "and" : f->kind == K::Or ? "or" : "implies";
  out += "(";
  out += op;
  for (const auto& k : f->kids) {
    out += " ";
    prefix_rec(k, out);
  }
  out += ")";
}

}  // namespace

std::string to_prefix(const F& f) {
  std::string out;
  prefix_rec(f, out);
  return out;
}

F parse_prefix(const std::string& text) {
  SexpReader r(text);
  Sexp x = r.read();
  if (!r.at_end()) r.fail("trailing input after formula");
  return to_formula(x);
}

std::vector<F> parse_prefix_all(const std::string& text) {
  SexpReader r(text);
  std::vector<F> out;
  while (!r.at_end()) out.push_back(to_formula(r.read()));
  return out;
}

}  // namespace exr
