#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace exr {

struct Term {
  enum class Kind { Var, Const };
  Kind kind = Kind::Var;
  std::string name;

  static Term var(std::string n) { return {Kind::Var, std::move(n)}; }
  static Term cst(std::string n) { return {Kind::Const, std::move(n)}; }
  bool is_var() const { return kind == Kind::Var; }
  bool is_const() const { return kind == Kind::Const; }
  auto operator<=>(const Term&) const = default;
};

struct Atom {
  enum class Kind { Rel, Eq, False };
  Kind kind = Kind::Rel;
  std::string rel;  // relational atoms only
  std::vector<Term> args;

  static Atom relational(std::string r, std::vector<Term> a) {
    return {Kind::Rel, std::move(r), std::move(a)};
  }
  static Atom equality(Term l, Term r) { return {Kind::Eq, "", {std::move(l), std::move(r)}}; }
  bool is_rel() const { return kind == Kind::Rel; }
  bool is_eq() const { return kind == Kind::Eq; }
  auto operator<=>(const Atom&) const = default;
};

struct HeadDisjunct {
  std::vector<std::string> exvars;
  std::vector<Atom> atoms;
  auto operator<=>(const HeadDisjunct&) const = default;
};

// body -> exists y (psi_1 | ... | psi_n); no heads means a negative constraint.
struct Rule {
  std::vector<Atom> body;
  std::vector<HeadDisjunct> heads;
  std::string label;

  bool operator==(const Rule& o) const { return body == o.body && heads == o.heads; }
  bool operator<(const Rule& o) const {
    if (body != o.body) return body < o.body;
    return heads < o.heads;
  }
};

struct Signature {
  std::map<std::string, int> relations;
  std::set<std::string> constants;

  // Throws std::invalid_argument on an arity clash.
  void add_relation(const std::string& name, int arity);
  void add_constant(const std::string& name) { constants.insert(name); }
  void merge(const Signature& o);
  int arity(const std::string& rel) const;  // -1 if absent
  bool operator==(const Signature&) const = default;
};

enum class Flag : std::uint8_t {
  GD,
  NegativeConstraint,
  Safe,
  DED,
  ED,
  TGD,
  FrontierGuarded,
  Guarded,
  Linear,
  Diverse,
  QuasiFrontierGuarded,
};

const char* flag_name(Flag f);
const std::vector<Flag>& all_flags();

struct RuleClass {
  std::uint32_t bits = 0;
  bool has(Flag f) const { return bits & (1u << static_cast<unsigned>(f)); }
  void set(Flag f) { bits |= 1u << static_cast<unsigned>(f); }
  std::vector<Flag> flags() const;
  std::string str() const;  // "GD,Safe,..." in declaration order
};

struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(int l, int c, const std::string& msg);
};

struct RuleSet {
  Signature sig;
  std::vector<Rule> rules;
};

// Variables in the body plus head variables that are not existential.
std::set<std::string> universal_vars(const Rule& r);
std::set<Term> frontier_variables(const Rule& r);
std::set<std::string> rule_constants(const Rule& r);
Signature signature_of(const std::vector<Rule>& rules);
bool is_negative_constraint(const Rule& r);
bool has_equality(const Rule& r);

RuleClass classify(const Rule& r);
// Leftmost body relational atom covering the frontier (or all universal vars).
std::optional<std::size_t> guard_index(const Rule& r, bool all_universal = false);
// Quasi frontier-guardedness of a single-disjunct rule read through its head graph.
bool rule_is_quasi_frontier_guarded(const Rule& r);

// Parses one rule. Unknown relations are added to sig when auto_declare is set.
Rule parse_rule(const std::string& text, Signature& sig, bool auto_declare = true);
// Parses a whole rule file: one rule per line, '#' comments, @rel / @const headers.
RuleSet parse_rules(const std::string& text, bool auto_declare = true);

std::string render_term(const Term& t);
std::string render_atom(const Atom& a);
std::string render_rule(const Rule& r);
// Header lines for relations and constants followed by one rule per line.
std::string render_rules(const RuleSet& rs);

}  // namespace exr
