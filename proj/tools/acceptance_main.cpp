// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any failed.
// Optional arguments: criterion ids to run, e.g. `kronopt_acceptance 1 2 9`.

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>

#include "kronopt/acceptance.hpp"

int main(int argc, char** argv) {
  kronopt::acceptance::Options opts;
  for (int i = 1; i < argc; ++i) opts.only.push_back(std::atoi(argv[i]));
  if (const char* dir = std::getenv("KRONOPT_ACCEPTANCE_OUT")) opts.output_dir = dir;

  int failed = 0;
  int ran = 0;
  for (int id = 1; id <= kronopt::acceptance::kCriterionCount; ++id) {
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) {
      continue;
    }
    const auto r = kronopt::acceptance::run_criterion(id, opts);
    std::cout << kronopt::acceptance::format_line(r) << std::endl;
    ++ran;
    if (!r.passed) ++failed;
  }
  std::cout << ran - failed << "/" << ran << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
