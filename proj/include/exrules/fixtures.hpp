#pragma once

#include <string>
#include <vector>

#include "exrules/preservation.hpp"

namespace exr {

struct FixtureResult {
  bool pass = false;
  std::string detail;
  double millis = 0;
};

struct Fixture {
  std::string name;
  std::string locus;  // which worked example or construction it reproduces
  FixtureResult (*run)();
};

const std::vector<Fixture>& fixtures();
FixtureResult run_fixture(const Fixture& f);  // times the run, turns exceptions into failures

// Named rule sets shared by the CLI, the tests and the acceptance suite.
struct RuleFixture {
  std::string name;
  std::string text;  // rule DSL
};

const std::vector<RuleFixture>& rule_corpus();
const RuleFixture& rule_fixture(const std::string& name);

// Linear order with Min, Max and a partial successor, conjoined with
// (every non-maximum element has a successor) -> exists x not Q(x).
Theory linear_order_theory();

// Hardness constructions over Sigma = {Start(x) -> Next(x)} and q = exists x Goal(x).
extern const char* const kHardnessProduct;
extern const char* const kHardnessDisjointUnion;
extern const char* const kHardnessUnion;

}  // namespace exr
