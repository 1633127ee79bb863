#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace kronopt::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  unsigned threads = 0;                // training runs in parallel; 0 = KRONOPT_THREADS / hw
  std::filesystem::path output_dir;    // comparison tables for the training criteria, if set
  std::vector<int> only;               // empty = all twelve
};

inline constexpr int kCriterionCount = 12;

CriterionResult run_criterion(int id, const Options& opts = {});
std::vector<CriterionResult> run_all(const Options& opts = {});

/// "PASS  3  norm sandwich ... (1.23 s)  detail"
std::string format_line(const CriterionResult& r);

}  // namespace kronopt::acceptance
