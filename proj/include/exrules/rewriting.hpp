#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exrules/preservation.hpp"

namespace exr {

// Model-set comparison over every structure up to a domain bound.
struct EquivalenceReport {
  bool equivalent = true;
  int max_domain = 0;
  std::uint64_t structures = 0;
  bool capped = false;
  std::optional<Structure> witness;
  bool witness_models_input = false;  // which side the witness satisfies
};

// Both sides are read over the merged signature; cap bounds structures visited.
EquivalenceReport bounded_equivalence(const Theory& input, const Theory& output, int max_domain,
                                      std::uint64_t cap = 50'000'000);
EquivalenceReport bounded_equivalence(const std::vector<Rule>& input, const std::vector<Rule>& output,
                                      int max_domain, std::uint64_t cap = 50'000'000);

struct Entailment {
  bool refuted = false;  // false means NotRefuted, never a proof
  std::optional<Structure> countermodel;
};

// Searches models of the premises (up to budget.max_domain) that violate the conclusion.
Entailment entails_bounded(const std::vector<Rule>& premises, const Rule& conclusion, const Budget& budget);

// Output of a rewrite: rules in the target class plus flagged residual rules
// that fall outside it. rules + residuals is the rewritten theory.
struct Rewrite {
  std::vector<Rule> rules;
  std::vector<Rule> residuals;
  std::vector<std::string> notes;
  std::optional<EquivalenceReport> report;
  bool ok() const { return !report || report->equivalent; }
  std::vector<Rule> all() const;
};

std::vector<Rule> split_ded(const Rule& r);
Rewrite ded_to_ed_bounded(const std::vector<Rule>& rules, const Budget& budget);

// x=y, x=c and c=x are substituted away; a surviving c=d flags the rule as a residual.
Rewrite eliminate_body_equalities(const Rule& r);
// Equalities pinning an existential are substituted; the rest become flagged EGD residuals.
Rewrite eliminate_head_equalities(const Rule& r);
// Both eliminations plus a bounded equivalence report, for a set of EDs.
Rewrite ed_to_tgd_normal(const std::vector<Rule>& rules, const Budget& budget);

bool has_trivial_model(const std::vector<Rule>& rules);
bool has_sharp_model(const std::vector<Rule>& rules);
bool gd_to_ded_decidable(const std::vector<Rule>& rules);

// base guarded by pairwise disequations over una_terms.
struct DiverseDependency {
  Rule base;
  std::vector<Term> una_terms;
  bool operator==(const DiverseDependency&) const = default;
};

F diverse_to_formula(const DiverseDependency& d);
std::string render_diverse(const DiverseDependency& d);

struct DiverseNormal {
  std::vector<DiverseDependency> deps;
  std::vector<Rule> residuals;  // branches equating two distinct constants
};

DiverseNormal normalize_diverse(const Rule& r);

struct HeadGraph {
  std::vector<Atom> vertices;
  std::vector<std::pair<int, int>> edges;  // i < j
  std::vector<std::vector<int>> components;
};

HeadGraph head_graph(const Rule& r);
HeadGraph head_graph(const DiverseDependency& d);
bool is_quasi_frontier_guarded(const DiverseDependency& d);

// Existential variable -> term of the host rule; identity elsewhere.
using Substitution = std::map<std::string, Term>;

DiverseDependency apply_substitution(const DiverseDependency& d, const Substitution& s);
// Throws std::length_error when the candidate count exceeds cap.
std::vector<Substitution> specialization_set(const DiverseDependency& d, std::uint64_t cap = 1'000'000);

F gamma_star(const DiverseDependency& d, const std::vector<Substitution>& s);
Rule gamma_dagger(const DiverseDependency& d, const std::vector<Substitution>& s);
std::vector<Rule> delta_set(const DiverseDependency& d, const std::vector<Substitution>& s);

// One frontier-guarded rule per head component.
std::vector<Rule> qfg_to_frontier_guarded(const Rule& r);

Rewrite tgd_to_fgtgd_bounded(const std::vector<Rule>& rules, const Budget& budget,
                             std::uint64_t specialization_cap = 1'000'000);

// Report header, then input, output and residual sections in the rule DSL.
std::string write_rewrite_report(const std::string& target, const RuleSet& input, const Rewrite& rw);

}  // namespace exr
