#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "exrules/rules.hpp"
#include "exrules/structure.hpp"

namespace exr {

struct Formula;
using F = std::shared_ptr<const Formula>;

struct Formula {
  enum class Kind { Atom, Eq, True, False, Not, And, Or, Implies, Exists, Forall };
  Kind kind = Kind::True;
  std::string rel;                // Atom
  std::vector<Term> args;         // Atom, Eq
  std::vector<F> kids;            // Not (1), And/Or (n), Implies (2), quantifiers (1)
  std::vector<std::string> vars;  // quantifiers
};

namespace fo {
F atom(std::string rel, std::vector<Term> args);
F atom(const Atom& a);  // relational or equality atom from a rule
F eq(Term l, Term r);
F top();
F bot();
F neg(F f);
F conj(std::vector<F> fs);
F disj(std::vector<F> fs);
F implies(F l, F r);
F exists(std::vector<std::string> vars, F body);
F forall(std::vector<std::string> vars, F body);
F conj_atoms(const std::vector<Atom>& atoms);
Term v(std::string n);
Term c(std::string n);
}  // namespace fo

using Assignment = std::map<std::string, Elem>;

std::set<std::string> free_vars(const F& f);
bool is_sentence(const F& f);
bool formula_equal(const F& a, const F& b);
// Relations and constants mentioned by the formula.
Signature formula_signature(const F& f);
// Flattens nested top-level conjunctions.
std::vector<F> top_conjuncts(const F& f);

// Tarskian truth; quantifiers range over the finite domain. Throws
// std::invalid_argument on an unbound variable or unknown symbol.
bool eval(const Structure& s, const F& f, const Assignment& asg = {});

// Sentence evaluator with variables resolved to slots and relations read into
// dense tables once per structure. Agrees with eval on every input eval accepts.
class CompiledFormula {
 public:
  explicit CompiledFormula(const F& f);  // throws std::invalid_argument on free variables
  bool holds(const Structure& s) const;

 private:
  struct Node {
    Formula::Kind kind;
    int rel = -1;
    std::vector<int> args;  // slot >= 0, constant -(index + 1)
    std::vector<int> kids;
    std::vector<int> slots;  // quantified
  };
  struct Ctx;
  int compile(const F& f, std::map<std::string, int>& scope);
  bool run(int node, Ctx& c) const;
  bool quant(const Node& n, std::size_t i, bool existential, Ctx& c) const;

  std::vector<Node> nodes_;
  int root_ = 0;
  int slots_ = 0;
  std::vector<std::string> rels_;
  std::vector<int> arity_;
  std::vector<std::string> consts_;
};

// Prefix text format, e.g. (forall (x y) (implies (R x y) (exists (z) (S y z)))).
std::string to_prefix(const F& f);
F parse_prefix(const std::string& text);
// A file may hold several sentences; they are read as one conjunction list.
std::vector<F> parse_prefix_all(const std::string& text);

}  // namespace exr
