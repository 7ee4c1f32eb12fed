#include "exrules/rules.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace exr {

void Signature::add_relation(const std::string& name, int arity) {
  auto it = relations.find(name);
  if (it == relations.end()) {
    relations.emplace(name, arity);
  } else if (it->second != arity) {
    throw std::invalid_argument("relation " + name + " used with arity " + std::to_string(arity) +
                                " but declared " + std::to_string(it->second));
  }
}

void Signature::merge(const Signature& o) {
  for (const auto& [r, a] : o.relations) add_relation(r, a);
  constants.insert(o.constants.begin(), o.constants.end());
}

int Signature::arity(const std::string& rel) const {
  auto it = relations.find(rel);
  return it == relations.end() ? -1 : it->second;
}

const char* flag_name(Flag f) {
  switch (f) {
    case Flag::GD: return "GD";
    case Flag::NegativeConstraint: return "NegativeConstraint";
    case Flag::Safe: return "Safe";
    case Flag::DED: return "DED";
    case Flag::ED: return "ED";
    case Flag::TGD: return "TGD";
    case Flag::FrontierGuarded: return "FrontierGuarded";
    case Flag::Guarded: return "Guarded";
    case Flag::Linear: return "Linear";
    case Flag::Diverse: return "Diverse";
    case Flag::QuasiFrontierGuarded: return "QuasiFrontierGuarded";
  }
  return "?";
}

const std::vector<Flag>& all_flags() {
  static const std::vector<Flag> v = {Flag::GD,     Flag::NegativeConstraint,  Flag::Safe,
                                      Flag::DED,    Flag::ED,                  Flag::TGD,
                                      Flag::FrontierGuarded, Flag::Guarded,    Flag::Linear,
                                      Flag::Diverse, Flag::QuasiFrontierGuarded};
  return v;
}

std::vector<Flag> RuleClass::flags() const {
  std::vector<Flag> out;
  for (Flag f : all_flags())
    if (has(f)) out.push_back(f);
  return out;
}

std::string RuleClass::str() const {
  std::string s;
  for (Flag f : flags()) {
    if (!s.empty()) s += ',';
    s += flag_name(f);
  }
  return s;
}

ParseError::ParseError(int l, int c, const std::string& msg)
    : std::runtime_error("line " + std::to_string(l) + ", col " + std::to_string(c) + ": " + msg),
      line(l),
      column(c) {}

namespace {

void collect_vars(const std::vector<Atom>& atoms, std::set<std::string>& out) {
  for (const auto& a : atoms)
    for (const auto& t : a.args)
      if (t.is_var()) out.insert(t.name);
}

bool atom_has_var(const Atom& a, const std::string& v) {
  for (const auto& t : a.args)
    if (t.is_var() && t.name == v) return true;
  return false;
}

}  // namespace

std::set<std::string> universal_vars(const Rule& r) {
  std::set<std::string> u;
  collect_vars(r.body, u);
  for (const auto& h : r.heads) {
    std::set<std::string> hv;
    collect_vars(h.atoms, hv);
    for (const auto& v : hv)
      if (std::find(h.exvars.begin(), h.exvars.end(), v) == h.exvars.end()) u.insert(v);
  }
  return u;
}

std::set<Term> frontier_variables(const Rule& r) {
  std::set<Term> out;
  for (const auto& h : r.heads) {
    std::set<std::string> hv;
    collect_vars(h.atoms, hv);
    for (const auto& v : hv)
      if (std::find(h.exvars.begin(), h.exvars.end(), v) == h.exvars.end())
        out.insert(Term::var(v));
  }
  return out;
}

std::set<std::string> rule_constants(const Rule& r) {
  std::set<std::string> c;
  auto scan = [&](const std::vector<Atom>& atoms) {
    for (const auto& a : atoms)
      for (const auto& t : a.args)
        if (t.is_const()) c.insert(t.name);
  };
  scan(r.body);
  for (const auto& h : r.heads) scan(h.atoms);
  return c;
}

Signature signature_of(const std::vector<Rule>& rules) {
  Signature sig;
  auto scan = [&](const std::vector<Atom>& atoms) {
    for (const auto& a : atoms) {
      if (a.is_rel()) sig.add_relation(a.rel, static_cast<int>(a.args.size()));
      for (const auto& t : a.args)
        if (t.is_const()) sig.add_constant(t.name);
    }
  };
  for (const auto& r : rules) {
    scan(r.body);
    for (const auto& h : r.heads) scan(h.atoms);
  }
  return sig;
}

bool is_negative_constraint(const Rule& r) { return r.heads.empty(); }

bool has_equality(const Rule& r) {
  auto eq = [](const std::vector<Atom>& atoms) {
    return std::any_of(atoms.begin(), atoms.end(), [](const Atom& a) { return a.is_eq(); });
  };
  if (eq(r.body)) return true;
  return std::any_of(r.heads.begin(), r.heads.end(),
                     [&](const HeadDisjunct& h) { return eq(h.atoms); });
}

std::optional<std::size_t> guard_index(const Rule& r, bool all_universal) {
  std::set<std::string> need;
  if (all_universal) {
    need = universal_vars(r);
  } else {
    for (const auto& t : frontier_variables(r)) need.insert(t.name);
  }
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    const Atom& a = r.body[i];
    if (!a.is_rel()) continue;
    bool ok = std::all_of(need.begin(), need.end(),
                          [&](const std::string& v) { return atom_has_var(a, v); });
    if (ok) return i;
  }
  return std::nullopt;
}

bool rule_is_quasi_frontier_guarded(const Rule& r) {
  if (r.heads.size() != 1) return false;
  const auto& h = r.heads[0];
  const std::size_t n = h.atoms.size();
  std::set<std::string> ex(h.exvars.begin(), h.exvars.end());
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (const auto& t : h.atoms[i].args)
        if (t.is_var() && ex.count(t.name) && atom_has_var(h.atoms[j], t.name))
          parent[find(i)] = find(j);
  std::map<std::size_t, std::set<std::string>> comp;
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = comp[find(i)];
    for (const auto& t : h.atoms[i].args)
      if (t.is_var() && !ex.count(t.name)) s.insert(t.name);
  }
  for (const auto& [root, vars] : comp) {
    bool ok = std::any_of(r.body.begin(), r.body.end(), [&](const Atom& a) {
      return a.is_rel() && std::all_of(vars.begin(), vars.end(),
                                       [&](const std::string& v) { return atom_has_var(a, v); });
    });
    if (!ok) return false;
  }
  return true;
}

RuleClass classify(const Rule& r) {
  RuleClass c;
  c.set(Flag::GD);
  if (is_negative_constraint(r)) c.set(Flag::NegativeConstraint);
  bool safe = true;
  for (const auto& t : frontier_variables(r)) {
    bool found = std::any_of(r.body.begin(), r.body.end(),
                             [&](const Atom& a) { return a.is_rel() && atom_has_var(a, t.name); });
    if (!found) safe = false;
  }
  if (!safe) return c;
  c.set(Flag::Safe);
  if (is_negative_constraint(r)) return c;
  c.set(Flag::DED);
  if (r.heads.size() != 1) return c;
  c.set(Flag::ED);
  if (has_equality(r)) return c;
  c.set(Flag::TGD);
  if (guard_index(r, false)) c.set(Flag::FrontierGuarded);
  if (guard_index(r, true)) c.set(Flag::Guarded);
  if (r.body.size() == 1) c.set(Flag::Linear);
  if (rule_is_quasi_frontier_guarded(r)) c.set(Flag::QuasiFrontierGuarded);
  // With at most one constant or universal variable the disequation guard is empty.
  if (universal_vars(r).size() + rule_constants(r).size() <= 1) c.set(Flag::Diverse);
  return c;
}

// ---------------------------------------------------------------- parsing

namespace {

enum class Tok { Ident, Quoted, LParen, RParen, Comma, Dot, Eq, Bar, Arrow, Slash, Number, End };

struct Token {
  Tok kind;
  std::string text;
  int col;
};

std::vector<Token> lex(const std::string& s, int line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    int col = static_cast<int>(i) + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' ||
                              s[j] == '\''))
        ++j;
      out.push_back({Tok::Ident, s.substr(i, j - i), col});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Tok::Number, s.substr(i, j - i), col});
      i = j;
    } else if (c == '"' || c == '\'') {
      std::size_t j = s.find(c, i + 1);
      if (j == std::string::npos) throw ParseError(line, col, "unterminated quoted constant");
      if (j == i + 1) throw ParseError(line, col, "empty constant name");
      out.push_back({Tok::Quoted, s.substr(i + 1, j - i - 1), col});
      i = j + 1;
    } else if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
      out.push_back({Tok::Arrow, "->", col});
      i += 2;
    } else {
      Tok k;
      switch (c) {
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case ',': k = Tok::Comma; break;
        case '.': k = Tok::Dot; break;
        case '=': k = Tok::Eq; break;
        case '|': k = Tok::Bar; break;
        case '/': k = Tok::Slash; break;
        default: throw ParseError(line, col, std::string("unexpected character '") + c + "'");
      }
      out.push_back({k, std::string(1, c), col});
      ++i;
    }
  }
  out.push_back({Tok::End, "", static_cast<int>(s.size()) + 1});
  return out;
}

class RuleParser {
 public:
  RuleParser(const std::string& text, int line, Signature& sig, bool auto_declare)
      : toks_(lex(text, line)), line_(line), sig_(sig), auto_(auto_declare) {}

  Rule parse() {
    Rule r;
    r.body.push_back(atom());
    while (peek().kind == Tok::Comma) {
      next();
      r.body.push_back(atom());
    }
    expect(Tok::Arrow, "'->'");
    if (peek().kind == Tok::Ident && peek().text == "false") {
      next();
    } else {
      r.heads.push_back(disjunct());
      while (peek().kind == Tok::Bar) {
        next();
        r.heads.push_back(disjunct());
      }
    }
    if (peek().kind != Tok::End) fail(peek(), "trailing input '" + peek().text + "'");
    validate(r);
    return r;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    throw ParseError(line_, t.col, msg);
  }
  void expect(Tok k, const char* what) {
    if (peek().kind != k) fail(peek(), std::string("expected ") + what);
    next();
  }

  Term term() {
    const Token& t = next();
    if (t.kind == Tok::Quoted) {
      sig_.add_constant(t.text);
      return Term::cst(t.text);
    }
    if (t.kind != Tok::Ident) fail(t, "expected a term");
    if (sig_.constants.count(t.text)) return Term::cst(t.text);
    if (!std::islower(static_cast<unsigned char>(t.text[0])))
      fail(t, "undeclared constant '" + t.text + "' (variables are lowercase)");
    if (t.text == "exists" || t.text == "false") fail(t, "keyword used as a term");
    return Term::var(t.text);
  }

  Atom atom() {
    const Token& t = peek();
    if (t.kind == Tok::Ident && toks_[pos_ + 1].kind == Tok::LParen) {
      if (t.text == "false" || t.text == "exists") fail(t, "keyword used as a relation name");
      std::string name = next().text;
      next();
      std::vector<Term> args;
      if (peek().kind != Tok::RParen) {
        args.push_back(term());
        while (peek().kind == Tok::Comma) {
          next();
          args.push_back(term());
        }
      }
      expect(Tok::RParen, "')'");
      int ar = static_cast<int>(args.size());
      int declared = sig_.arity(name);
      if (declared < 0) {
        if (!auto_) fail(t, "undeclared relation '" + name + "'");
        sig_.add_relation(name, ar);
      } else if (declared != ar) {
        fail(t, "arity mismatch for " + name + ": expected " + std::to_string(declared) +
                    ", got " + std::to_string(ar));
      }
      return Atom::relational(name, std::move(args));
    }
    if (t.kind == Tok::Ident && t.text == "false") fail(t, "falsum is only allowed as a whole head");
    Term l = term();
    expect(Tok::Eq, "'=' or an atom");
    Term r = term();
    return Atom::equality(std::move(l), std::move(r));
  }

  HeadDisjunct disjunct() {
    HeadDisjunct d;
    if (peek().kind == Tok::Ident && peek().text == "exists") {
      next();
      do {
        const Token& v = next();
        if (v.kind != Tok::Ident) fail(v, "expected an existential variable");
        if (sig_.constants.count(v.text)) fail(v, "constant '" + v.text + "' used as a variable");
        if (!std::islower(static_cast<unsigned char>(v.text[0])))
          fail(v, "existential variables are lowercase");
        if (std::find(d.exvars.begin(), d.exvars.end(), v.text) != d.exvars.end())
          fail(v, "duplicate existential variable '" + v.text + "'");
        d.exvars.push_back(v.text);
      } while (peek().kind == Tok::Comma && (next(), true));
      expect(Tok::Dot, "'.' after existential variables");
    }
    const Token& start = peek();
    if (start.kind == Tok::Ident && start.text == "false")
      fail(start, "falsum is only allowed as a whole head");
    d.atoms.push_back(atom());
    while (peek().kind == Tok::Comma) {
      next();
      d.atoms.push_back(atom());
    }
    return d;
  }

  void validate(const Rule& r) {
    std::set<std::string> body;
    collect_vars(r.body, body);
    std::set<std::string> consts = rule_constants(r);
    std::set<std::string> all = body;
    for (const auto& h : r.heads) {
      std::set<std::string> hv;
      collect_vars(h.atoms, hv);
      all.insert(hv.begin(), hv.end());
      for (const auto& y : h.exvars) {
        if (body.count(y))
          throw ParseError(line_, 1, "existential variable '" + y + "' also occurs in the body");
        if (!hv.count(y))
          throw ParseError(line_, 1, "existential variable '" + y + "' does not occur in its disjunct");
      }
    }
    for (const auto& v : all)
      if (consts.count(v)) throw ParseError(line_, 1, "name '" + v + "' used as variable and constant");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_;
  Signature& sig_;
  bool auto_;
};

std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

void parse_header(const std::string& line, int lineno, Signature& sig) {
  auto toks = lex(line.substr(line.find('@') + 1), lineno);
  if (toks[0].kind != Tok::Ident) throw ParseError(lineno, 1, "bad header");
  const std::string kw = toks[0].text;
  std::size_t i = 1;
  if (kw == "rel") {
    while (toks[i].kind != Tok::End) {
      if (toks[i].kind == Tok::Comma) { ++i; continue; }
      if (toks[i].kind != Tok::Ident || toks[i + 1].kind != Tok::Slash ||
          toks[i + 2].kind != Tok::Number)
        throw ParseError(lineno, toks[i].col + 1, "expected NAME/ARITY");
      try {
        sig.add_relation(toks[i].text, std::stoi(toks[i + 2].text));
      } catch (const std::invalid_argument& e) {
        throw ParseError(lineno, toks[i].col + 1, e.what());
      }
      i += 3;
    }
  } else if (kw == "const") {
    while (toks[i].kind != Tok::End) {
      if (toks[i].kind == Tok::Comma) { ++i; continue; }
      if (toks[i].kind != Tok::Ident && toks[i].kind != Tok::Quoted)
        throw ParseError(lineno, toks[i].col + 1, "expected a constant name");
      sig.add_constant(toks[i].text);
      ++i;
    }
  } else {
    throw ParseError(lineno, 1, "unknown header '@" + kw + "'");
  }
}

}  // namespace

Rule parse_rule(const std::string& text, Signature& sig, bool auto_declare) {
  return RuleParser(text, 1, sig, auto_declare).parse();
}

RuleSet parse_rules(const std::string& text, bool auto_declare) {
  RuleSet rs;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = strip_comment(raw);
    if (blank(line)) continue;
    auto first = line.find_first_not_of(" \t");
    if (line[first] == '@') {
      parse_header(line, lineno, rs.sig);
      continue;
    }
    rs.rules.push_back(RuleParser(line, lineno, rs.sig, auto_declare).parse());
  }
  return rs;
}

// --------------------------------------------------------------- rendering

std::string render_term(const Term& t) { return t.is_const() ? "\"" + t.name + "\"" : t.name; }

std::string render_atom(const Atom& a) {
  switch (a.kind) {
    case Atom::Kind::False: return "false";
    case Atom::Kind::Eq: return render_term(a.args[0]) + " = " + render_term(a.args[1]);
    case Atom::Kind::Rel: break;
  }
  std::string s = a.rel + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) s += ',';
    s += render_term(a.args[i]);
  }
  return s + ")";
}

std::string render_rule(const Rule& r) {
  std::string s;
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    if (i) s += ", ";
    s += render_atom(r.body[i]);
  }
  s += " -> ";
  if (r.heads.empty()) return s + "false";
  for (std::size_t d = 0; d < r.heads.size(); ++d) {
    if (d) s += " | ";
    const auto& h = r.heads[d];
    if (!h.exvars.empty()) {
      s += "exists ";
      for (std::size_t i = 0; i < h.exvars.size(); ++i) {
        if (i) s += ',';
        s += h.exvars[i];
      }
      s += ". ";
    }
    for (std::size_t i = 0; i < h.atoms.size(); ++i) {
      if (i) s += ", ";
      s += render_atom(h.atoms[i]);
    }
  }
  return s;
}

std::string render_rules(const RuleSet& rs) {
  std::string s;
  if (!rs.sig.relations.empty()) {
    s += "@rel";
    for (const auto& [r, a] : rs.sig.relations) s += " " + r + "/" + std::to_string(a);
    s += "\n";
  }
  if (!rs.sig.constants.empty()) {
    s += "@const";
    for (const auto& c : rs.sig.constants) s += " \"" + c + "\"";
    s += "\n";
  }
  for (const auto& r : rs.rules) s += render_rule(r) + "\n";
  return s;
}

}  // namespace exr
