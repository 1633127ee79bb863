// kronopt: run, compare and check Kronecker-factored optimizers.
//
// Exit codes: 0 ok, 1 invariant failure (non-finite update, failed check),
// 2 bad configuration or usage.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "kronopt/acceptance.hpp"
#include "kronopt/error.hpp"
#include "kronopt/harness.hpp"
#include "kronopt/tasks.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvariant = 1;
constexpr int kConfig = 2;

using namespace kronopt;

int cmd_run(const std::string& path) {
  const harness::ExperimentConfig cfg = harness::load_config(path);
  const harness::RunSummary s = harness::run_experiment(cfg);
  nlohmann::json brief = s.to_json();
  brief.erase("eig_per_step");
  brief.erase("loss_curve");
  std::cout << brief.dump(2) << "\n";
  if (s.aborted_at) {
    std::cerr << "run aborted at step " << *s.aborted_at << ": " << s.abort_reason << "\n";
    return kInvariant;
  }
  return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& csv, unsigned threads) {
  std::vector<harness::ExperimentConfig> cfgs;
  for (const auto& p : paths) cfgs.push_back(harness::load_config(p));
  const auto rows = harness::compare_runs(cfgs, threads);
  std::cout << harness::format_comparison_table(rows);
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + csv);
    harness::write_comparison_csv(rows, out);
  }
  for (const auto& r : rows) {
    if (r.aborted_at) return kInvariant;
  }
  return kOk;
}

int cmd_check(const std::vector<int>& only, const std::string& out_dir, unsigned threads) {
  acceptance::Options opts;
  opts.threads = threads;
  opts.only = only;
  if (!out_dir.empty()) opts.output_dir = out_dir;
  int failed = 0;
  for (int id = 1; id <= acceptance::kCriterionCount; ++id) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto r = acceptance::run_criterion(id, opts);
    std::cout << acceptance::format_line(r) << std::endl;
    if (!r.passed) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << "\n";
  return failed == 0 ? kOk : kInvariant;
}

int cmd_export(const std::string& out, std::size_t points, int classes, int clusters,
               std::uint64_t seed) {
  tasks::write_dataset_csv(tasks::make_mixture(points, classes, clusters, seed), out);
  std::cout << "wrote " << points << " points to " << out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kronecker-factored optimizer experiments"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "train one config, write telemetry and summary");
  run->add_option("--config", config, "experiment JSON")->required()->check(CLI::ExistingFile);

  std::vector<std::string> configs;
  std::string csv;
  unsigned threads = 0;
  auto* compare = app.add_subcommand("compare", "train several configs on the same task");
  compare->add_option("--configs", configs, "experiment JSONs")->required()->check(CLI::ExistingFile);
  compare->add_option("--csv", csv, "also write the comparison table as CSV");
  compare->add_option("--threads", threads, "parallel runs (default KRONOPT_THREADS or all cores)");

  std::vector<int> only;
  std::string out_dir;
  auto* check = app.add_subcommand("check", "run the acceptance criteria");
  check->add_option("--only", only, "criterion ids to run")->check(CLI::Range(1, acceptance::kCriterionCount));
  check->add_option("--output-dir", out_dir, "write training comparison tables here");
  check->add_option("--threads", threads, "parallel training runs");

  std::string data_out;
  std::size_t points = 2048;
  int classes = 4;
  int clusters = 3;
  std::uint64_t seed = 0;
  auto* exp = app.add_subcommand("export-data", "write the mlp_toy dataset as x1,x2,label CSV");
  exp->add_option("--out", data_out, "output CSV")->required();
  exp->add_option("--points", points)->check(CLI::PositiveNumber);
  exp->add_option("--classes", classes)->check(CLI::Range(2, 64));
  exp->add_option("--clusters", clusters, "clusters per class")->check(CLI::Range(1, 64));
  exp->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config);
    if (*compare) return cmd_compare(configs, csv, threads);
    if (*check) return cmd_check(only, out_dir, threads);
    if (*exp) return cmd_export(data_out, points, classes, clusters, seed);
  } catch (const Error& e) {
    std::cerr << "kronopt: " << e.what() << "\n";
    return e.kind() == ErrorKind::ConfigError ? kConfig : kInvariant;
  } catch (const std::exception& e) {
    std::cerr << "kronopt: " << e.what() << "\n";
    return kInvariant;
  }
  return kOk;
}
