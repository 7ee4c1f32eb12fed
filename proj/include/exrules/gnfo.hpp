#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exrules/semantics.hpp"

namespace exr {

struct GnfoFormula {
  F ast;
  bool gnfo_certified = false;
};

// Grammar: atom | exists x phi | phi and phi | phi or phi | atom and not phi,
// where the guard atom covers the free variables of the negated formula.
// Equality atoms count as guards.
bool is_gnfo(const F& f);

// Rewrites implications and universal quantifiers into not / or / exists.
F to_basic_connectives(const F& f);

enum class Side { A, B };
const char* side_relation(Side s);  // "D_A" or "D_B"

// Relativizes to D_A or D_B. Atoms gain D conjuncts on their arguments; an
// existential quantifier gains a D guard unless its body already forces one.
// Throws std::invalid_argument on implications and universal quantifiers.
F relativize(const F& f, Side s);

struct Reduction {
  F sentence;  // theta and pi_A(f) and pi_B(f) and not f, in plain first-order form
  Signature sig;
  std::optional<F> gnfo_form;
  bool gnfo_certified = false;
  std::vector<std::string> notes;
};

// Throws std::invalid_argument when tau already uses D_A or D_B.
Reduction disjoint_union_reduction(const F& f, const Signature& tau);
Reduction disjoint_union_reduction(const F& f);

// A model of size <= max_domain, least in enumeration order.
std::optional<Structure> bounded_sat(const F& f, int max_domain, const Signature& extra = {},
                                     std::uint64_t cap = UINT64_MAX);

F rules_to_sentence(const std::vector<Rule>& rules);
// Throws std::invalid_argument on a rule that is not a frontier-guarded TGD.
GnfoFormula fg_rules_to_gnfo(const std::vector<Rule>& rules);

}  // namespace exr
