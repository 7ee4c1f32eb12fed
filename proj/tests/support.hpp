#pragma once

// Random generators shared by the unit tests and the acceptance suite.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "exrules/formula.hpp"
#include "exrules/rules.hpp"
#include "exrules/structure.hpp"

namespace exr::testing {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

inline int pick(std::mt19937_64& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
inline bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// Fixed vocabulary P/1, Q/1, R/2 keeps every generated rule over one signature.
inline const std::vector<std::pair<std::string, int>>& vocabulary() {
  static const std::vector<std::pair<std::string, int>> v = {{"P", 1}, {"Q", 1}, {"R", 2}};
  return v;
}

inline std::string rel_atom(std::mt19937_64& rng, const std::vector<std::string>& vars) {
  const auto& [r, ar] = vocabulary()[pick(rng, static_cast<int>(vocabulary().size()))];
  std::string s = r + "(";
  for (int i = 0; i < ar; ++i) s += (i ? "," : "") + vars[pick(rng, static_cast<int>(vars.size()))];
  return s + ")";
}

enum class Shape { GD, ED, TGD };

// At most three atoms in total. GD may be unsafe, disjunctive or a constraint;
// ED keeps one safe disjunct and may use equality; TGD is equality-free.
inline std::string random_rule_text(std::mt19937_64& rng, Shape shape) {
  const std::vector<std::string> uvars = {"x", "y", "z"};
  const int body_n = 1 + pick(rng, 2);
  std::vector<std::string> body;
  for (int i = 0; i < body_n; ++i) {
    if (shape != Shape::TGD && i > 0 && coin(rng, 0.2)) {
      body.push_back(uvars[pick(rng, 3)] + " = " + uvars[pick(rng, 3)]);
    } else {
      body.push_back(rel_atom(rng, uvars));
    }
  }
  std::vector<std::string> used;
  for (const auto& v : uvars)
    for (const auto& b : body)
      if (b.find(v) != std::string::npos && b.find('(') != std::string::npos) {
        used.push_back(v);
        break;
      }
  if (used.empty()) used.push_back("x");

  const int room = 3 - body_n;
  std::string head;
  auto disjunct = [&](int atoms) {
    std::vector<std::string> pool = shape == Shape::GD ? uvars : used;
    bool ex = coin(rng, 0.4);
    if (ex) pool.push_back("w");
    std::string s;
    for (int i = 0; i < atoms; ++i) {
      if (i) s += ", ";
      if (shape != Shape::TGD && coin(rng, 0.2)) s += pool[pick(rng, static_cast<int>(pool.size()))] + " = " +
                                                       pool[pick(rng, static_cast<int>(pool.size()))];
      else s += rel_atom(rng, pool);
    }
    if (ex && s.find('w') != std::string::npos) s = "exists w. " + s;
    return s;
  };
  if (shape == Shape::GD) {
    int disjuncts = pick(rng, room + 1);
    if (disjuncts == 0) {
      head = "false";
    } else {
      for (int d = 0; d < disjuncts; ++d) head += (d ? " | " : "") + disjunct(1);
    }
  } else {
    head = disjunct(1 + pick(rng, room));
  }
  std::string s;
  for (std::size_t i = 0; i < body.size(); ++i) s += (i ? ", " : "") + body[i];
  return s + " -> " + head + "\n";
}

inline Structure random_structure(std::mt19937_64& rng, const Signature& sig, int n, double density = 0.4) {
  Structure s = make_structure(sig, iota_domain(n));
  for (const auto& c : sig.constants) s.cst[c] = s.domain[pick(rng, n)];
  for (const auto& [r, ar] : sig.relations)
    for (const auto& t : all_tuples(s.domain, ar))
      if (coin(rng, density)) s.rel[r].insert(t);
  return s;
}

// Sentences over P/1, R/2 and constant c built from every connective.
inline F random_formula(std::mt19937_64& rng, int depth, std::vector<std::string> bound) {
  auto term = [&]() {
    if (bound.empty() || coin(rng, 0.15)) return Term::cst("c");
    return Term::var(bound[pick(rng, static_cast<int>(bound.size()))]);
  };
  if (depth == 0 || (depth < 3 && coin(rng, 0.25))) {
    switch (pick(rng, 5)) {
      case 0: return fo::atom("P", {term()});
      case 1: return fo::atom("R", {term(), term()});
      case 2: return fo::eq(term(), term());
      case 3: return coin(rng) ? fo::top() : fo::bot();
      default: return fo::atom("R", {term(), term()});
    }
  }
  switch (pick(rng, 7)) {
    case 0: return fo::neg(random_formula(rng, depth - 1, bound));
    case 1: return fo::conj({random_formula(rng, depth - 1, bound), random_formula(rng, depth - 1, bound)});
    case 2: return fo::disj({random_formula(rng, depth - 1, bound), random_formula(rng, depth - 1, bound)});
    case 3: return fo::implies(random_formula(rng, depth - 1, bound), random_formula(rng, depth - 1, bound));
    default: {
      // Reusing a bound name exercises shadowing.
      std::string v = coin(rng, 0.3) && !bound.empty() ? bound[pick(rng, static_cast<int>(bound.size()))]
                                                       : "v" + std::to_string(bound.size());
      auto inner = bound;
      inner.push_back(v);
      F body = random_formula(rng, depth - 1, inner);
      return coin(rng) ? fo::exists({v}, body) : fo::forall({v}, body);
    }
  }
}

}  // namespace exr::testing
