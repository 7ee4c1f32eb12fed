#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "exrules/rules.hpp"

namespace exr {

using Elem = int;
using Tuple = std::vector<Elem>;
using ElemSet = std::set<Elem>;

struct Structure {
  Signature sig;
  std::vector<Elem> domain;  // sorted, unique, nonempty
  std::map<std::string, std::set<Tuple>> rel;  // one entry per relation of sig
  std::map<std::string, Elem> cst;

  bool has(const std::string& r, const Tuple& t) const;
  bool in_domain(Elem e) const;
  void add(const std::string& r, Tuple t);
  std::size_t size() const { return domain.size(); }
  Elem max_elem() const { return domain.empty() ? 0 : domain.back(); }
  std::size_t fact_count() const;
  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
  bool operator==(const Structure&) const = default;
};

// Empty relations over sig; constants default to the first element.
Structure make_structure(const Signature& sig, std::vector<Elem> domain);
std::vector<Elem> iota_domain(int n, Elem first = 1);

Structure induced_substructure(const Structure& s, const ElemSet& x);
// Union by element identity; constants must agree.
Structure structure_union(const Structure& a, const Structure& b);
bool disjoint_union_compatible(const Structure& a, const Structure& b);

// Elements of the product are 1..|A||B|, pairs in lexicographic order.
Structure direct_product(const Structure& a, const Structure& b);
std::vector<std::pair<Elem, Elem>> product_pairs(const Structure& a, const Structure& b);
Structure product_many(const std::vector<Structure>& xs);

// Monotone source of fresh element ids shared by a family of copies.
struct FreshIds {
  Elem next = 1;
  explicit FreshIds(Elem start = 1) : next(start) {}
  Elem take() { return next++; }
  void avoid(const Structure& s) {
    if (s.max_elem() >= next) next = s.max_elem() + 1;
  }
};

bool is_guarded_set(const Structure& s, const ElemSet& x);

struct IsoCopy {
  Structure copy;
  std::map<Elem, Elem> iso;  // original -> copy
};

IsoCopy iso_copy(const Structure& s, const ElemSet& x, FreshIds& fresh);

struct IsoUnion {
  Structure result;
  std::vector<ElemSet> family;
  std::vector<IsoCopy> copies;
};

IsoUnion isomorphic_union(const Structure& s, const std::vector<ElemSet>& g);
IsoUnion isomorphic_union(const Structure& s, const std::vector<ElemSet>& g, FreshIds& fresh);

inline constexpr Elem kStar = 1;
inline constexpr Elem kCirc = 2;

Structure trivial_structure(const Signature& sig);
Structure sharp_structure(const Signature& sig);

// Adds constants named by `names` (generated if empty) interpreted as elems.
Structure expand_with_constants(const Structure& s, const std::vector<Elem>& elems,
                                std::vector<std::string> names = {});
std::vector<std::string> fresh_constant_names(const Signature& sig, std::size_t k);

// Canonical fact order: relations by name, tuples lexicographically.
std::vector<std::pair<std::string, Tuple>> all_facts(const Signature& sig,
                                                     const std::vector<Elem>& domain);
std::vector<Tuple> all_tuples(const std::vector<Elem>& domain, int arity);

struct EnumStats {
  std::uint64_t emitted = 0;
  bool capped = false;
};

// Visits every structure over sig with the given domain. Order: constant
// assignments (constants by name, values ascending) outermost, then one
// subset mask per relation in name order, the first relation most significant.
// The callback returns false to stop.
EnumStats enumerate_over_domain(const Signature& sig, const std::vector<Elem>& domain,
                                const std::function<bool(const Structure&)>& cb,
                                std::uint64_t cap = UINT64_MAX);
// Domains {1..n} for n = 1..max_size.
EnumStats enumerate_structures(const Signature& sig, int max_size,
                               const std::function<bool(const Structure&)>& cb,
                               std::uint64_t cap = UINT64_MAX);
std::vector<Structure> all_structures(const Signature& sig, int max_size);
// Number of structures with an n-element domain (saturating).
std::uint64_t count_structures(const Signature& sig, int n);

// Text format: "domain: a b", "const c = a", facts "R(a,b)", optional "@rel R/2".
struct NamedStructure {
  Structure s;
  std::map<Elem, std::string> names;
};
NamedStructure parse_structure(const std::string& text, const Signature* sig = nullptr);
std::string write_structure(const Structure& s, const std::map<Elem, std::string>& names = {});
std::string elem_name(Elem e, const std::map<Elem, std::string>& names);

}  // namespace exr
