// exrules: batch front end over the library.
//
// Exit codes: 0 completed / none found / rewrite verified, 1 counterexample
// found / equivalence failed, 2 usage or parse error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exrules/fixtures.hpp"
#include "exrules/gnfo.hpp"
#include "exrules/preservation.hpp"
#include "exrules/rewriting.hpp"

using namespace exr;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFound = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  Budget budget;
  std::string mode = "exhaustive";
  std::string format = "text";
  std::string out;
  bool timings = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw UsageError("cannot write " + o.out);
  f << text;
}

bool json_mode(const Options& o) { return o.format == "json-lines"; }

// EXRULES_BUDGET="max_domain=3,max_pairs=100000,seed=7,mode=random"
void apply_env_budget(Options& o) {
  const char* env = std::getenv("EXRULES_BUDGET");
  if (!env) return;
  std::stringstream ss(env);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("EXRULES_BUDGET: expected key=value, got " + item);
    std::string k = item.substr(0, eq), v = item.substr(eq + 1);
    try {
      if (k == "max_domain") o.budget.max_domain = std::stoi(v);
      else if (k == "max_pairs") o.budget.max_pairs = std::stoull(v);
      else if (k == "max_guarded_family") o.budget.max_guarded_family = std::stoi(v);
      else if (k == "seed") o.budget.seed = std::stoull(v);
      else if (k == "mode") o.mode = v;
      else throw UsageError("EXRULES_BUDGET: unknown key " + k);
    } catch (const std::logic_error&) {
      throw UsageError("EXRULES_BUDGET: bad value for " + k);
    }
  }
}

void finish_budget(Options& o) {
  if (o.mode == "exhaustive") o.budget.mode = Mode::Exhaustive;
  else if (o.mode == "random") o.budget.mode = Mode::Random;
  else throw UsageError("--mode must be exhaustive or random");
  if (o.budget.max_domain < 1 || o.budget.max_pairs < 1 || o.budget.max_guarded_family < 1)
    throw UsageError("budget fields must be positive");
}

RuleSet load_rules(const std::string& path) { return parse_rules(read_file(path)); }

json budget_json(const Budget& b) {
  return {{"max_domain", b.max_domain},
          {"max_pairs", b.max_pairs},
          {"max_guarded_family", b.max_guarded_family},
          {"seed", b.seed},
          {"mode", b.mode == Mode::Exhaustive ? "exhaustive" : "random"}};
}

// ------------------------------------------------------------------ classify

int cmd_classify(const Options& o, const std::string& file) {
  RuleSet rs = load_rules(file);
  std::ostringstream out;
  std::vector<std::string> all;
  for (Flag f : all_flags()) {
    bool every = !rs.rules.empty();
    for (const auto& r : rs.rules) every = every && classify(r).has(f);
    if (every) all.push_back(flag_name(f));
  }
  for (std::size_t i = 0; i < rs.rules.size(); ++i) {
    RuleClass c = classify(rs.rules[i]);
    std::vector<std::string> flags;
    for (Flag f : all_flags())
      if (c.has(f)) flags.push_back(flag_name(f));
    if (json_mode(o)) {
      out << json{{"record", "rule"}, {"index", i}, {"rule", render_rule(rs.rules[i])}, {"flags", flags}}.dump()
          << "\n";
    } else {
      out << "rule " << i << ": " << render_rule(rs.rules[i]) << "\n  flags:";
      for (const auto& f : flags) out << " " << f;
      out << "\n";
    }
  }
  if (json_mode(o)) {
    out << json{{"record", "summary"}, {"rules", rs.rules.size()}, {"all", all}}.dump() << "\n";
  } else {
    out << "summary: " << rs.rules.size() << " rule(s)";
    if (!all.empty()) {
      out << "; all";
      for (const auto& f : all) out << " " << f;
    }
    out << "\n";
  }
  write_output(o, out.str());
  return kOk;
}

// ------------------------------------------------------------------ check

Theory load_theory(const std::string& rules_file, const std::string& sentences_file) {
  RuleSet rs = rules_file.empty() ? RuleSet{} : load_rules(rules_file);
  std::vector<F> sentences;
  if (!sentences_file.empty()) sentences = parse_prefix_all(read_file(sentences_file));
  return make_theory(rs.sig, rs.rules, sentences);
}

int cmd_check(const Options& o, const std::string& rules_file, const std::string& sentences_file,
              const std::string& property, const std::string& cert_path, const std::string& replay_path) {
  Theory t = load_theory(rules_file, sentences_file);
  std::ostringstream out;
  if (!replay_path.empty()) {
    Certificate c = parse_certificate(read_file(replay_path));
    std::string why;
    bool ok = replay(c, t, &why);
    if (json_mode(o)) {
      out << json{{"record", "replay"}, {"property", property_name(c.property)}, {"valid", ok}, {"reason", why}}.dump()
          << "\n";
    } else {
      out << "replay " << property_name(c.property) << ": " << (ok ? "valid" : "REJECTED");
      if (!why.empty()) out << " (" << why << ")";
      out << "\n";
    }
    write_output(o, out.str());
    return ok ? kOk : kFound;
  }

  std::vector<Property> props;
  if (property == "all") {
    props = all_properties();
  } else {
    auto p = property_from_name(property);
    if (!p) throw UsageError("unknown property: " + property);
    props.push_back(*p);
  }
  int code = kOk;
  for (Property p : props) {
    Verdict v = check_preservation(t, p, o.budget);
    bool found = v.outcome == Outcome::Counterexample;
    std::string path;
    if (found) {
      code = kFound;
      path = cert_path.empty() ? std::string(property_name(p)) + ".cert"
                               : (props.size() == 1 ? cert_path : cert_path + "." + property_name(p));
      std::ofstream f(path, std::ios::binary);
      if (!f) throw UsageError("cannot write " + path);
      f << write_certificate(*v.certificate);
    }
    if (json_mode(o)) {
      json rec{{"record", "check"},
               {"property", property_name(p)},
               {"outcome", found ? "Counterexample" : "NoCounterexampleWithinBudget"},
               {"structures", v.stats.structures},
               {"candidates", v.stats.candidates},
               {"budget_exhausted", v.stats.budget_exhausted},
               {"budget", budget_json(o.budget)}};
      if (found) rec["certificate"] = path;
      out << rec.dump() << "\n";
    } else {
      out << property_name(p) << ": " << (found ? "Counterexample" : "NoCounterexampleWithinBudget") << " ("
          << v.stats.structures << " base models, " << v.stats.candidates << " candidates"
          << (v.stats.budget_exhausted ? ", budget exhausted" : "") << ")\n";
      if (found) out << "  certificate: " << path << "\n" << write_certificate(*v.certificate);
    }
  }
  write_output(o, out.str());
  return code;
}

// ------------------------------------------------------------------ rewrite

std::string diverse_report(const RuleSet& rs, const std::vector<DiverseDependency>& deps,
                           const std::vector<Rule>& residuals, const EquivalenceReport& r) {
  std::ostringstream out;
  out << "# rewrite target: diverse\n# equivalence: " << (r.equivalent ? "verified" : "FAILED") << " up to size "
      << r.max_domain << " (" << r.structures << " structures" << (r.capped ? ", capped" : "") << ")\n";
  out << "# --- input\n";
  for (const auto& x : rs.rules) out << render_rule(x) << "\n";
  out << "# --- output\n";
  for (const auto& d : deps) out << render_diverse(d) << "\n";
  out << "# --- residuals\n";
  for (const auto& x : residuals) out << render_rule(x) << "\n";
  if (r.witness)
    out << "# --- witness (model of " << (r.witness_models_input ? "input" : "output") << " only)\n"
        << write_structure(*r.witness);
  return out.str();
}

int cmd_rewrite(const Options& o, const std::string& file, const std::string& target) {
  RuleSet rs = load_rules(file);
  if (target == "DED")
    throw UsageError(
        "rewrite to DED: no construction in scope; only the decision (trivial and sharp models) is "
        "available, see `check`");
  if (target == "linear")
    throw UsageError("rewrite to linear: no construction in scope; use `check` for the preservation test");

  std::ostringstream out;
  bool ok = true;
  if (target == "ED") {
    Rewrite rw = ded_to_ed_bounded(rs.rules, o.budget);
    ok = rw.ok();
    out << write_rewrite_report("ED", rs, rw);
    if (!ok) {
      Verdict v = check_preservation(rs.rules, Property::DirectProduct, o.budget);
      if (v.certificate)
        out << "# --- DirectProduct counterexample: the input is not closed under products, so no ED set is "
               "equivalent\n"
            << write_certificate(*v.certificate);
    }
  } else if (target == "TGD-normal") {
    Rewrite rw = ed_to_tgd_normal(rs.rules, o.budget);
    ok = rw.ok();
    out << write_rewrite_report("TGD-normal", rs, rw);
  } else if (target == "diverse") {
    std::vector<DiverseDependency> deps;
    std::vector<Rule> residuals;
    std::vector<F> sentences;
    for (const auto& r : rs.rules) {
      auto dn = normalize_diverse(r);
      for (auto& d : dn.deps) {
        sentences.push_back(diverse_to_formula(d));
        deps.push_back(std::move(d));
      }
      residuals.insert(residuals.end(), dn.residuals.begin(), dn.residuals.end());
    }
    auto rep = bounded_equivalence(make_theory(rs.sig, rs.rules), make_theory(rs.sig, residuals, sentences),
                                   o.budget.max_domain);
    ok = rep.equivalent;
    out << diverse_report(rs, deps, residuals, rep);
  } else if (target == "FGTGD") {
    Rewrite rw = tgd_to_fgtgd_bounded(rs.rules, o.budget);
    ok = rw.ok();
    out << write_rewrite_report("FGTGD", rs, rw);
  } else {
    throw UsageError("--target must be one of ED, TGD-normal, diverse, FGTGD (DED and linear are refused)");
  }
  if (json_mode(o)) {
    write_output(o, json{{"record", "rewrite"}, {"target", target}, {"verified", ok}, {"report", out.str()}}.dump() +
                        "\n");
  } else {
    write_output(o, out.str());
  }
  return ok ? kOk : kFound;
}

// ------------------------------------------------------------------ reduce-gnfo

int cmd_reduce(const Options& o, const std::string& file, int sat_bound, bool cross_check) {
  RuleSet rs = load_rules(file);
  Reduction red = disjoint_union_reduction(rules_to_sentence(rs.rules), rs.sig);
  std::ostringstream out;
  json rec{{"record", "reduce-gnfo"}, {"sentence", to_prefix(red.sentence)}, {"notes", red.notes}};
  out << "# disjoint-union reduction\n";
  for (const auto& n : red.notes) out << "# note: " << n << "\n";
  out << to_prefix(red.sentence) << "\n";
  if (red.gnfo_form) {
    out << "# gnfo form (" << (red.gnfo_certified ? "certified" : "NOT certified") << ")\n"
        << to_prefix(*red.gnfo_form) << "\n";
    rec["gnfo_form"] = to_prefix(*red.gnfo_form);
    rec["gnfo_certified"] = red.gnfo_certified;
  }
  int code = kOk;
  if (sat_bound > 0) {
    auto m = bounded_sat(red.sentence, sat_bound, red.sig);
    rec["sat_bound"] = sat_bound;
    rec["sat"] = m.has_value();
    if (m) {
      code = kFound;
      out << "# sat at bound " << sat_bound << ": model of size " << m->size() << "\n" << write_structure(*m);
      rec["model"] = write_structure(*m);
    } else {
      out << "# unsat up to size " << sat_bound << "\n";
    }
    if (cross_check) {
      Budget b = o.budget;
      b.max_domain = sat_bound;
      b.max_union = sat_bound;
      Verdict v = check_preservation(rs.rules, Property::DisjointUnion, b);
      bool found = v.outcome == Outcome::Counterexample;
      bool agree = found == m.has_value();
      out << "# cross-check DisjointUnion (union size <= " << sat_bound << "): "
          << (found ? "Counterexample" : "NoCounterexampleWithinBudget") << "; " << (agree ? "agree" : "DISAGREE")
          << "\n";
      rec["cross_check"] = {{"counterexample", found}, {"agree", agree}};
      if (!agree) code = kFound;
    }
  } else if (cross_check) {
    throw UsageError("--cross-check needs --sat-bound");
  }
  write_output(o, json_mode(o) ? rec.dump() + "\n" : out.str());
  return code;
}

// ------------------------------------------------------------------ fixtures

int cmd_fixtures(const Options& o, const std::string& only) {
  std::ostringstream out;
  bool any = false, all_pass = true;
  for (const auto& f : fixtures()) {
    if (!only.empty() && f.name != only) continue;
    any = true;
    FixtureResult r = run_fixture(f);
    all_pass = all_pass && r.pass;
    if (json_mode(o)) {
      json rec{{"record", "fixture"}, {"name", f.name}, {"locus", f.locus}, {"pass", r.pass}, {"detail", r.detail}};
      if (o.timings) rec["millis"] = r.millis;
      out << rec.dump() << "\n";
    } else {
      out << (r.pass ? "PASS " : "FAIL ") << f.name << " [" << f.locus << "]";
      if (o.timings) out << " " << r.millis << " ms";
      out << "\n  " << r.detail << "\n";
    }
  }
  if (!any) throw UsageError("no fixture named " + only);
  write_output(o, out.str());
  return all_pass ? kOk : kFound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workbench for existential rule languages: classification, preservation checks, rewriting"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  try {
    apply_env_budget(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  app.add_option("--max-domain", o.budget.max_domain, "largest domain searched");
  app.add_option("--max-pairs", o.budget.max_pairs, "cap on constructed candidates");
  app.add_option("--max-guarded-family", o.budget.max_guarded_family, "largest guarded family for isomorphic unions");
  app.add_option("--seed", o.budget.seed, "seed for random mode");
  app.add_option("--mode", o.mode, "exhaustive|random")->check(CLI::IsMember({"exhaustive", "random"}));
  app.add_option("--format", o.format, "text|json-lines")->check(CLI::IsMember({"text", "json-lines"}));
  app.add_option("-o,--out", o.out, "write the report here instead of stdout");
  app.add_flag("--timings", o.timings, "include wall-clock timings (breaks byte-determinism)");

  std::string rules_file, sentences_file, property = "all", cert, replay_path, target, only;
  int sat_bound = 0;
  bool cross = false;

  auto* classify_cmd = app.add_subcommand("classify", "per-rule class flags and a set summary");
  classify_cmd->add_option("rules", rules_file, "rule file")->required();

  auto* check_cmd = app.add_subcommand("check", "preservation counterexample search or certificate replay");
  check_cmd->add_option("rules", rules_file, "rule file");
  check_cmd->add_option("--sentences", sentences_file, "extra FO sentences in prefix format");
  check_cmd->add_option("--property", property, "property name or all");
  check_cmd->add_option("--cert", cert, "certificate path (default <Property>.cert)");
  check_cmd->add_option("--replay", replay_path, "validate a certificate instead of searching");

  auto* rewrite_cmd = app.add_subcommand("rewrite", "class-to-class rewriting with a bounded equivalence report");
  rewrite_cmd->add_option("rules", rules_file, "rule file")->required();
  rewrite_cmd->add_option("--target", target, "ED|TGD-normal|diverse|FGTGD")->required();

  auto* reduce_cmd = app.add_subcommand("reduce-gnfo", "disjoint-union reduction to a satisfiability question");
  reduce_cmd->add_option("rules", rules_file, "rule file")->required();
  reduce_cmd->add_option("--sat-bound", sat_bound, "search models up to this size");
  reduce_cmd->add_flag("--cross-check", cross, "compare with the DisjointUnion search");

  auto* fixtures_cmd = app.add_subcommand("fixtures", "run the embedded worked examples");
  fixtures_cmd->add_option("--only", only, "run a single fixture");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    finish_budget(o);
    if (*classify_cmd) return cmd_classify(o, rules_file);
    if (*check_cmd) {
      if (rules_file.empty() && sentences_file.empty()) throw UsageError("check needs a rule file or --sentences");
      return cmd_check(o, rules_file, sentences_file, property, cert, replay_path);
    }
    if (*rewrite_cmd) return cmd_rewrite(o, rules_file, target);
    if (*reduce_cmd) return cmd_reduce(o, rules_file, sat_bound, cross);
    if (*fixtures_cmd) return cmd_fixtures(o, only);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::length_error& e) {
    std::cerr << "error: cap exceeded: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
