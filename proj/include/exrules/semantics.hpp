#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "exrules/formula.hpp"
#include "exrules/rules.hpp"
#include "exrules/structure.hpp"

namespace exr {

// Universal closure of a rule as a first-order sentence.
F rule_to_formula(const Rule& r);

// A rule compiled against variable slots; reusable across structures.
class CompiledRule {
 public:
  explicit CompiledRule(const Rule& r);
  // Lexicographically least body assignment (universal variables sorted by
  // name, elements ascending) under which every head disjunct fails.
  std::optional<Assignment> violation(const Structure& s) const;
  bool holds(const Structure& s) const { return !violation(s); }
  const std::vector<std::string>& universal() const { return uvars_; }

 private:
  struct CTerm {
    int slot = -1;  // -1 means constant
    std::string cname;
  };
  struct CAtom {
    bool eq = false;
    std::string rel;
    std::vector<CTerm> args;
    int ready = -1;  // slot after which all arguments are bound
  };
  struct CDisjunct {
    int first_slot = 0;
    int nex = 0;
    std::vector<CAtom> atoms;
  };

  bool atom_true(const CAtom& a, const Structure& s, const std::vector<Elem>& val, Tuple& buf) const;
  bool disjunct_true(const CDisjunct& d, const Structure& s, std::vector<Elem>& val, int k, Tuple& buf) const;

  std::vector<std::string> uvars_;
  std::vector<CAtom> body_;
  std::vector<CDisjunct> heads_;
  int nslots_ = 0;
};

std::optional<Assignment> rule_violation(const Structure& s, const Rule& r);
bool satisfies_rule(const Structure& s, const Rule& r);

// Rules together with free-standing first-order sentences.
struct Theory {
  Signature sig;
  std::vector<Rule> rules;
  std::vector<F> sentences;
};

Theory make_theory(const std::vector<Rule>& rules, const std::vector<F>& sentences = {});
Theory make_theory(const Signature& sig, const std::vector<Rule>& rules,
                   const std::vector<F>& sentences = {});

struct Violation {
  bool sentence = false;
  std::size_t index = 0;
  Assignment asg;  // rules only
};

class CompiledTheory {
 public:
  explicit CompiledTheory(const Theory& t);
  std::optional<Violation> violation(const Structure& s) const;
  bool holds(const Structure& s) const { return !violation(s); }
  const Theory& theory() const { return t_; }

  // Models over `domain`, in the same order as enumerate_over_domain, pruning
  // a branch as soon as some rule or sentence conjunct with all symbols fixed fails.
  EnumStats enumerate_models(const std::vector<Elem>& domain,
                             const std::function<bool(const Structure&)>& cb,
                             std::uint64_t cap = UINT64_MAX) const;

 private:
  struct Unit {
    bool sentence;
    std::size_t index;
    F f;
    int ready;
    std::shared_ptr<const CompiledFormula> cf;
  };
  std::vector<CompiledFormula> sentences_;
  Theory t_;
  std::vector<CompiledRule> rules_;
  std::vector<Unit> units_;
  std::vector<std::string> rel_order_;
};

std::optional<Violation> theory_violation(const Structure& s, const Theory& t);
bool satisfies(const Structure& s, const Theory& t);

struct HomWitness {
  enum class Kind { Plain, Strict };
  std::map<Elem, Elem> map;
  Kind kind = Kind::Plain;
  bool onto = false;
};

bool is_homomorphism(const Structure& a, const Structure& b, const std::map<Elem, Elem>& h);
bool is_strict_homomorphism(const Structure& a, const Structure& b, const std::map<Elem, Elem>& h,
                            bool require_onto);

std::optional<HomWitness> find_homomorphism(const Structure& a, const Structure& b);
// Homomorphism extending the given pins (element of a -> element of b).
std::optional<HomWitness> find_homomorphism_pinned(const Structure& a, const Structure& b,
                                                   const std::map<Elem, Elem>& pins);
std::optional<HomWitness> find_strict_homomorphism(const Structure& a, const Structure& b,
                                                   bool require_onto);
std::optional<std::map<Elem, Elem>> find_isomorphism(const Structure& a, const Structure& b);
bool isomorphic(const Structure& a, const Structure& b);

bool mutual_hom_pinned(const Structure& a, const Tuple& ta, const Structure& b, const Tuple& tb);

struct GlobalHomResult {
  bool holds = false;
  std::vector<std::pair<Tuple, Tuple>> witnesses;  // checked tuple -> image tuple
  Tuple failing;                                   // first tuple without an image
};

// Definition-level check over every duplicate-free tuple of length <= |A|.
GlobalHomResult is_globally_homomorphic(const Structure& a, const Structure& b);

// Homomorphism from m onto m|x that fixes x pointwise, if any.
std::optional<HomWitness> find_retraction(const Structure& m, const ElemSet& x);

// Conjunctive queries: existential quantifiers over a conjunction of
// relational and equality atoms (true is the empty conjunction).
bool is_cq(const F& q);
bool eval_cq(const Structure& s, const F& q, const Assignment& asg = {});

}  // namespace exr
