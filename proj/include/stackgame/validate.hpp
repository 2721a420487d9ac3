#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stackgame::validate {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Runs the full invariant suite (linalg, policy, env, oracle, learner
// properties) with fixed seeds. Each property is independent; a throw inside
// a property marks it failed with the exception message.
std::vector<PropertyResult> run_all();

// Prints one pass/fail line per property; returns true when all passed.
bool report(const std::vector<PropertyResult>& results, std::ostream& out);

}  // namespace stackgame::validate
