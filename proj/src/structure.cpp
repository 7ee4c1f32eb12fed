#include "exrules/structure.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <iterator>
#include <stdexcept>
#include <tuple>

namespace exr {

bool Structure::has(const std::string& r, const Tuple& t) const {
  auto it = rel.find(r);
  return it != rel.end() && it->second.count(t) > 0;
}

bool Structure::in_domain(Elem e) const { return std::binary_search(domain.begin(), domain.end(), e); }

void Structure::add(const std::string& r, Tuple t) { rel[r].insert(std::move(t)); }

std::size_t Structure::fact_count() const {
  std::size_t n = 0;
  for (const auto& [r, ts] : rel) n += ts.size();
  return n;
}

void Structure::validate() const {
  if (domain.empty()) throw std::invalid_argument("structure domain is empty");
  if (!std::is_sorted(domain.begin(), domain.end()) ||
      std::adjacent_find(domain.begin(), domain.end()) != domain.end())
    throw std::invalid_argument("domain must be sorted and duplicate-free");
  for (const auto& [r, ts] : rel) {
    int ar = sig.arity(r);
    if (ar < 0) throw std::invalid_argument("relation " + r + " not in signature");
    for (const auto& t : ts) {
      if (static_cast<int>(t.size()) != ar) throw std::invalid_argument("bad tuple length in " + r);
      for (Elem e : t)
        if (!in_domain(e)) throw std::invalid_argument("tuple of " + r + " leaves the domain");
    }
  }
  for (const auto& [r, ar] : sig.relations)
    if (!rel.count(r)) throw std::invalid_argument("relation " + r + " has no table");
  for (const auto& c : sig.constants) {
    auto it = cst.find(c);
    if (it == cst.end()) throw std::invalid_argument("constant " + c + " uninterpreted");
    if (!in_domain(it->second)) throw std::invalid_argument("constant " + c + " outside domain");
  }
  if (cst.size() != sig.constants.size()) throw std::invalid_argument("stray constant interpretation");
}

Structure make_structure(const Signature& sig, std::vector<Elem> domain) {
  Structure s;
  s.sig = sig;
  std::sort(domain.begin(), domain.end());
  domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
  s.domain = std::move(domain);
  for (const auto& [r, ar] : sig.relations) s.rel[r];
  for (const auto& c : sig.constants) s.cst[c] = s.domain.empty() ? 0 : s.domain.front();
  return s;
}

std::vector<Elem> iota_domain(int n, Elem first) {
  std::vector<Elem> d(n);
  for (int i = 0; i < n; ++i) d[i] = first + i;
  return d;
}

Structure induced_substructure(const Structure& s, const ElemSet& x) {
  if (x.empty()) throw std::invalid_argument("induced substructure on an empty set");
  for (Elem e : x)
    if (!s.in_domain(e)) throw std::invalid_argument("element outside the domain");
  for (const auto& [c, e] : s.cst)
    if (!x.count(e)) throw std::invalid_argument("constant " + c + " interpreted outside the set");
  Structure out = make_structure(s.sig, std::vector<Elem>(x.begin(), x.end()));
  out.cst = s.cst;
  for (const auto& [r, ts] : s.rel)
    for (const auto& t : ts)
      if (std::all_of(t.begin(), t.end(), [&](Elem e) { return x.count(e) > 0; })) out.rel[r].insert(t);
  return out;
}

Structure structure_union(const Structure& a, const Structure& b) {
  if (!(a.sig == b.sig)) throw std::invalid_argument("union: signature mismatch");
  if (a.cst != b.cst) throw std::invalid_argument("union: constant interpretations differ");
  std::vector<Elem> dom = a.domain;
  dom.insert(dom.end(), b.domain.begin(), b.domain.end());
  Structure out = make_structure(a.sig, dom);
  out.cst = a.cst;
  for (const auto& [r, ts] : a.rel) out.rel[r].insert(ts.begin(), ts.end());
  for (const auto& [r, ts] : b.rel) out.rel[r].insert(ts.begin(), ts.end());
  return out;
}

bool disjoint_union_compatible(const Structure& a, const Structure& b) {
  if (!(a.sig == b.sig)) return false;
  if (a.cst != b.cst) return false;
  ElemSet overlap;
  std::set_intersection(a.domain.begin(), a.domain.end(), b.domain.begin(), b.domain.end(),
                        std::inserter(overlap, overlap.end()));
  if (overlap.empty()) return true;
  auto inside = [&](const Tuple& t) {
    return std::all_of(t.begin(), t.end(), [&](Elem e) { return overlap.count(e) > 0; });
  };
  for (const auto& [r, ts] : a.rel) {
    const auto& other = b.rel.at(r);
    for (const auto& t : ts)
      if (inside(t) && !other.count(t)) return false;
    for (const auto& t : other)
      if (inside(t) && !ts.count(t)) return false;
  }
  return true;
}

std::vector<std::pair<Elem, Elem>> product_pairs(const Structure& a, const Structure& b) {
  std::vector<std::pair<Elem, Elem>> p;
  p.reserve(a.size() * b.size());
  for (Elem x : a.domain)
    for (Elem y : b.domain) p.emplace_back(x, y);
  return p;
}

Structure direct_product(const Structure& a, const Structure& b) {
  if (!(a.sig == b.sig)) throw std::invalid_argument("product: signature mismatch");
  std::map<Elem, std::size_t> ia, ib;
  for (std::size_t i = 0; i < a.size(); ++i) ia[a.domain[i]] = i;
  for (std::size_t j = 0; j < b.size(); ++j) ib[b.domain[j]] = j;
  const std::size_t nb = b.size();
  auto id = [&](Elem x, Elem y) { return static_cast<Elem>(ia[x] * nb + ib[y] + 1); };
  Structure out = make_structure(a.sig, iota_domain(static_cast<int>(a.size() * nb)));
  for (const auto& c : a.sig.constants) out.cst[c] = id(a.cst.at(c), b.cst.at(c));
  for (const auto& [r, ta] : a.rel) {
    const auto& tb = b.rel.at(r);
    auto& dst = out.rel[r];
    for (const auto& u : ta)
      for (const auto& v : tb) {
        Tuple t(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) t[k] = id(u[k], v[k]);
        dst.insert(std::move(t));
      }
  }
  return out;
}

Structure product_many(const std::vector<Structure>& xs) {
  if (xs.empty()) throw std::invalid_argument("product of an empty list");
  Structure acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = direct_product(acc, xs[i]);
  return acc;
}

bool is_guarded_set(const Structure& s, const ElemSet& x) {
  for (Elem e : x)
    if (!s.in_domain(e)) return false;
  for (const auto& [c, e] : s.cst)
    if (!x.count(e)) return false;
  return true;
}

IsoCopy iso_copy(const Structure& s, const ElemSet& x, FreshIds& fresh) {
  if (!is_guarded_set(s, x)) throw std::invalid_argument("iso_copy: anchor is not a guarded set");
  fresh.avoid(s);
  IsoCopy out;
  std::vector<Elem> dom;
  for (Elem e : s.domain) {
    Elem img = x.count(e) ? e : fresh.take();
    out.iso[e] = img;
    dom.push_back(img);
  }
  out.copy = make_structure(s.sig, dom);
  for (const auto& [c, e] : s.cst) out.copy.cst[c] = out.iso.at(e);
  for (const auto& [r, ts] : s.rel)
    for (const auto& t : ts) {
      Tuple u(t.size());
      for (std::size_t k = 0; k < t.size(); ++k) u[k] = out.iso.at(t[k]);
      out.copy.rel[r].insert(std::move(u));
    }
  return out;
}

IsoUnion isomorphic_union(const Structure& s, const std::vector<ElemSet>& g, FreshIds& fresh) {
  if (g.empty()) throw std::invalid_argument("isomorphic union over an empty family");
  IsoUnion out;
  out.family = g;
  for (const auto& x : g) out.copies.push_back(iso_copy(s, x, fresh));
  out.result = out.copies[0].copy;
  for (std::size_t i = 1; i < out.copies.size(); ++i)
    out.result = structure_union(out.result, out.copies[i].copy);
  return out;
}

IsoUnion isomorphic_union(const Structure& s, const std::vector<ElemSet>& g) {
  FreshIds fresh(s.max_elem() + 1);
  return isomorphic_union(s, g, fresh);
}

Structure trivial_structure(const Signature& sig) {
  Structure s = make_structure(sig, {kStar});
  for (const auto& [r, ar] : sig.relations) s.rel[r].insert(Tuple(ar, kStar));
  for (const auto& c : sig.constants) s.cst[c] = kStar;
  return s;
}

Structure sharp_structure(const Signature& sig) {
  Structure s = make_structure(sig, {kStar, kCirc});
  for (const auto& [r, ar] : sig.relations) s.rel[r].insert(Tuple(ar, kStar));
  for (const auto& c : sig.constants) s.cst[c] = kStar;
  return s;
}

std::vector<std::string> fresh_constant_names(const Signature& sig, std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; out.size() < k; ++i) {
    std::string n = "_p" + std::to_string(i);
    if (!sig.constants.count(n)) out.push_back(n);
  }
  return out;
}

Structure expand_with_constants(const Structure& s, const std::vector<Elem>& elems,
                                std::vector<std::string> names) {
  if (names.empty()) names = fresh_constant_names(s.sig, elems.size());
  if (names.size() != elems.size()) throw std::invalid_argument("expand: name count mismatch");
  Structure out = s;
  for (std::size_t i = 0; i < elems.size(); ++i) {
    if (!s.in_domain(elems[i])) throw std::invalid_argument("expand: element outside the domain");
    if (out.sig.constants.count(names[i])) throw std::invalid_argument("expand: constant exists");
    out.sig.add_constant(names[i]);
    out.cst[names[i]] = elems[i];
  }
  return out;
}

std::vector<Tuple> all_tuples(const std::vector<Elem>& domain, int arity) {
  std::vector<Tuple> out;
  Tuple t(arity);
  std::function<void(int)> rec = [&](int k) {
    if (k == arity) {
      out.push_back(t);
      return;
    }
    for (Elem e : domain) {
      t[k] = e;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

std::vector<std::pair<std::string, Tuple>> all_facts(const Signature& sig,
                                                     const std::vector<Elem>& domain) {
  std::vector<std::pair<std::string, Tuple>> out;
  for (const auto& [r, ar] : sig.relations)
    for (auto& t : all_tuples(domain, ar)) out.emplace_back(r, std::move(t));
  return out;
}

EnumStats enumerate_over_domain(const Signature& sig, const std::vector<Elem>& domain,
                                const std::function<bool(const Structure&)>& cb,
                                std::uint64_t cap) {
  EnumStats st;
  Structure s = make_structure(sig, domain);
  std::vector<std::string> consts(sig.constants.begin(), sig.constants.end());
  std::vector<std::pair<std::string, std::vector<Tuple>>> rels;
  for (const auto& [r, ar] : sig.relations) {
    rels.emplace_back(r, all_tuples(s.domain, ar));
    if (rels.back().second.size() > 62) throw std::length_error("relation table too large to enumerate");
  }
  bool stop = false;
  std::function<void(std::size_t)> rel_level = [&](std::size_t i) {
    if (stop) return;
    if (i == rels.size()) {
      if (st.emitted >= cap) {
        st.capped = true;
        stop = true;
        return;
      }
      ++st.emitted;
      if (!cb(s)) stop = true;
      return;
    }
    const auto& tuples = rels[i].second;
    auto& table = s.rel[rels[i].first];
    const std::uint64_t n = std::uint64_t{1} << tuples.size();
    for (std::uint64_t m = 0; m < n && !stop; ++m) {
      table.clear();
      for (std::size_t b = 0; b < tuples.size(); ++b)
        if (m >> b & 1) table.insert(tuples[b]);
      rel_level(i + 1);
    }
    table.clear();
  };
  std::function<void(std::size_t)> const_level = [&](std::size_t i) {
    if (stop) return;
    if (i == consts.size()) {
      rel_level(0);
      return;
    }
    for (Elem e : s.domain) {
      s.cst[consts[i]] = e;
      const_level(i + 1);
      if (stop) return;
    }
  };
  const_level(0);
  return st;
}

EnumStats enumerate_structures(const Signature& sig, int max_size,
                               const std::function<bool(const Structure&)>& cb, std::uint64_t cap) {
  if (max_size < 1) throw std::invalid_argument("max_size must be at least 1");
  EnumStats total;
  bool stopped = false;
  for (int n = 1; n <= max_size && !stopped; ++n) {
    auto wrapped = [&](const Structure& s) {
      bool go = cb(s);
      if (!go) stopped = true;
      return go;
    };
    EnumStats st = enumerate_over_domain(sig, iota_domain(n), wrapped, cap - total.emitted);
    total.emitted += st.emitted;
    if (st.capped) {
      total.capped = true;
      break;
    }
  }
  return total;
}

std::vector<Structure> all_structures(const Signature& sig, int max_size) {
  std::vector<Structure> out;
  enumerate_structures(sig, max_size, [&](const Structure& s) {
    out.push_back(s);
    return true;
  });
  return out;
}

std::uint64_t count_structures(const Signature& sig, int n) {
  std::uint64_t bits = 0;
  for (const auto& [r, ar] : sig.relations) {
    std::uint64_t k = 1;
    for (int i = 0; i < ar; ++i) k *= static_cast<std::uint64_t>(n);
    bits += k;
  }
  std::uint64_t c = bits >= 64 ? UINT64_MAX : (std::uint64_t{1} << bits);
  for (std::size_t i = 0; i < sig.constants.size(); ++i) {
    if (c > UINT64_MAX / static_cast<std::uint64_t>(n)) return UINT64_MAX;
    c *= static_cast<std::uint64_t>(n);
  }
  return c;
}

// ------------------------------------------------------------ text format

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool is_int(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  return std::all_of(s.begin() + i, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string elem_name(Elem e, const std::map<Elem, std::string>& names) {
  auto it = names.find(e);
  return it == names.end() ? std::to_string(e) : it->second;
}

NamedStructure parse_structure(const std::string& text, const Signature* given) {
  Signature sig = given ? *given : Signature{};
  std::map<std::string, Elem> ids;
  std::vector<std::string> order;
  std::vector<std::pair<std::string, std::string>> consts;
  std::vector<std::tuple<int, std::string, std::vector<std::string>>> facts;
  bool have_domain = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.rfind("@rel", 0) == 0) {
      for (const auto& item : split_names(line.substr(4))) {
        auto slash = item.find('/');
        if (slash == std::string::npos || !is_int(item.substr(slash + 1)))
          throw ParseError(lineno, 1, "expected NAME/ARITY in @rel");
        try {
          sig.add_relation(item.substr(0, slash), std::stoi(item.substr(slash + 1)));
        } catch (const std::invalid_argument& e) {
          throw ParseError(lineno, 1, e.what());
        }
      }
    } else if (line.rfind("domain:", 0) == 0) {
      if (have_domain) throw ParseError(lineno, 1, "domain declared twice");
      have_domain = true;
      for (const auto& n : split_names(line.substr(7))) {
        if (ids.count(n)) throw ParseError(lineno, 1, "duplicate element '" + n + "'");
        ids[n] = 0;
        order.push_back(n);
      }
      if (order.empty()) throw ParseError(lineno, 1, "empty domain");
    } else if (line.rfind("const ", 0) == 0) {
      auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(lineno, 1, "expected 'const c = e'");
      std::string c = trim(line.substr(6, eq - 6));
      if (c.size() >= 2 && (c.front() == '"' || c.front() == '\'')) c = c.substr(1, c.size() - 2);
      consts.emplace_back(c, trim(line.substr(eq + 1)));
      if (!given) sig.add_constant(c);
    } else {
      auto lp = line.find('(');
      auto rp = line.rfind(')');
      if (lp == std::string::npos || rp == std::string::npos || rp < lp || trim(line.substr(rp + 1)) != "")
        throw ParseError(lineno, 1, "expected a fact R(a,b)");
      std::string r = trim(line.substr(0, lp));
      auto args = split_names(line.substr(lp + 1, rp - lp - 1));
      facts.emplace_back(lineno, r, args);
    }
  }
  if (!have_domain) throw ParseError(lineno, 1, "missing 'domain:' line");
  bool numeric = std::all_of(order.begin(), order.end(), is_int);
  NamedStructure out;
  std::vector<Elem> dom;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Elem id = numeric ? std::stoi(order[i]) : static_cast<Elem>(i + 1);
    ids[order[i]] = id;
    dom.push_back(id);
    if (!numeric) out.names[id] = order[i];
  }
  for (const auto& [ln, r, args] : facts) {
    int declared = sig.arity(r);
    if (declared < 0) {
      if (given) throw ParseError(ln, 1, "relation '" + r + "' not in signature");
      sig.add_relation(r, static_cast<int>(args.size()));
    } else if (declared != static_cast<int>(args.size())) {
      throw ParseError(ln, 1, "arity mismatch for " + r);
    }
  }
  out.s = make_structure(sig, dom);
  for (const auto& [ln, r, args] : facts) {
    Tuple t;
    for (const auto& a : args) {
      auto it = ids.find(a);
      if (it == ids.end()) throw ParseError(ln, 1, "undeclared element '" + a + "'");
      t.push_back(it->second);
    }
    out.s.rel[r].insert(t);
  }
  for (const auto& [c, e] : consts) {
    if (!sig.constants.count(c)) throw ParseError(0, 1, "constant '" + c + "' not in signature");
    auto it = ids.find(e);
    if (it == ids.end()) throw ParseError(0, 1, "constant '" + c + "' names an undeclared element");
    out.s.cst[c] = it->second;
  }
  for (const auto& c : sig.constants) {
    bool set = std::any_of(consts.begin(), consts.end(), [&](const auto& p) { return p.first == c; });
    if (!set) throw ParseError(0, 1, "constant '" + c + "' has no interpretation");
  }
  return out;
}

std::string write_structure(const Structure& s, const std::map<Elem, std::string>& names) {
  std::string out;
  if (!s.sig.relations.empty()) {
    out += "@rel";
    for (const auto& [r, ar] : s.sig.relations) out += " " + r + "/" + std::to_string(ar);
    out += "\n";
  }
  out += "domain:";
  for (Elem e : s.domain) out += " " + elem_name(e, names);
  out += "\n";
  for (const auto& [c, e] : s.cst) out += "const \"" + c + "\" = " + elem_name(e, names) + "\n";
  for (const auto& [r, ts] : s.rel)
    for (const auto& t : ts) {
      out += r + "(";
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ",";
        out += elem_name(t[i], names);
      }
      out += ")\n";
    }
  return out;
}

}  // namespace exr
