#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exrules/semantics.hpp"

namespace exr {

enum class Property {
  GlobalHomPreimage,
  DirectProduct,
  StrictHomImage,
  StrictHomPreimage,
  IsomorphicUnion,
  DisjointUnion,
  Union,
};

const char* property_name(Property p);
std::optional<Property> property_from_name(const std::string& s);
const std::vector<Property>& all_properties();

enum class Mode { Exhaustive, Random };

struct Budget {
  int max_domain = 2;
  std::uint64_t max_pairs = 5'000'000;  // cap on candidate constructions tested
  int max_guarded_family = 2;
  std::uint64_t seed = 0;
  Mode mode = Mode::Exhaustive;
  int max_union = 0;  // Union / DisjointUnion: bound on |A u B|, 0 for none
};

// Structure roles by property:
//   GlobalHomPreimage  model, preimage; maps embedding (preimage->model), retraction (model->preimage)
//   DirectProduct      A, B, product
//   StrictHomImage     model, image; map h (model->image)
//   StrictHomPreimage  model, preimage; map h (preimage->model)
//   IsomorphicUnion    model, union; family; maps copy0.. (model->union)
//   DisjointUnion      A, B, union
//   Union              A, B, union
struct Certificate {
  Property property = Property::Union;
  std::map<std::string, Structure> structures;
  std::map<std::string, std::map<Elem, Elem>> maps;
  std::vector<ElemSet> family;
  Violation violation;  // on the constructed structure
};

const char* failing_role(Property p);

enum class Outcome { NoCounterexampleWithinBudget, Counterexample };

struct SearchStats {
  std::uint64_t structures = 0;  // base models examined
  std::uint64_t candidates = 0;  // constructed structures tested
  bool budget_exhausted = false;
};

struct Verdict {
  Property property = Property::Union;
  Outcome outcome = Outcome::NoCounterexampleWithinBudget;
  std::optional<Certificate> certificate;
  SearchStats stats;
  Budget budget;
};

Verdict check_preservation(const Theory& t, Property p, const Budget& budget);
Verdict check_preservation(const std::vector<Rule>& rules, Property p, const Budget& budget);

// Re-validates every claim of a certificate from scratch.
bool replay(const Certificate& c, const Theory& t, std::string* why = nullptr);
bool replay(const Verdict& v, const Theory& t, std::string* why = nullptr);
bool replay(const Verdict& v, const std::vector<Rule>& rules, std::string* why = nullptr);

std::map<Property, Verdict> property_matrix(const Theory& t, const Budget& budget);
std::map<Property, Verdict> property_matrix(const std::vector<Rule>& rules, const Budget& budget);

// Certificates serialise as structure blocks plus map, family and violation lines.
std::string write_certificate(const Certificate& c);
Certificate parse_certificate(const std::string& text);

}  // namespace exr
