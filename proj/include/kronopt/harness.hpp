#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kronopt/optimizers.hpp"
#include "kronopt/tasks.hpp"

namespace kronopt::harness {

inline constexpr const char* kCsvHeader =
    "step,loss,grad_norm,block,factor,criterion,decision,qr_iters,eig_count,update_norm,"
    "graft_norm,wall_ms";

struct TaskSpec {
  std::string name = "kron_quadratic";  // kron_quadratic | matrix_regression | mlp_toy
  std::size_t m = 8;
  std::size_t n = 8;
  std::size_t k = 64;
  std::size_t hidden = 32;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::size_t batch_size = 64;  // matrix_regression and mlp_toy; 0 means full batch
  std::string dataset_csv;      // mlp_toy: load points from here instead of generating

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

std::unique_ptr<tasks::Task> make_task(const TaskSpec& spec);

struct ExperimentConfig {
  std::string name = "run";
  TaskSpec task;
  OptimizerConfig optimizer;
  std::int64_t steps = 100;
  std::int64_t telemetry_every = 1;
  std::optional<double> target_loss;
  std::uint64_t seed = 0;
  std::string telemetry_csv;  // empty: no CSV
  std::string summary_json;   // empty: no summary file
  // false writes wall_ms as 0 so telemetry files are byte-identical across runs
  bool record_wall_clock = true;

  void validate() const;
};

/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

struct FactorTotals {
  std::size_t block = 0;
  std::string factor;
  std::int64_t eig_count = 0;
  std::int64_t qr_iters = 0;
};

struct RunSummary {
  std::string name;
  std::string variant;
  std::int64_t steps_completed = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::optional<std::int64_t> steps_to_target;
  std::int64_t total_eig_count = 0;
  std::int64_t total_qr_iters = 0;
  std::vector<FactorTotals> factors;
  std::vector<std::int64_t> eig_per_step;  // full recomputations at each step, all factors
  std::vector<std::pair<std::int64_t, double>> loss_curve;  // telemetry steps only
  double wall_ms = 0.0;
  std::optional<std::int64_t> aborted_at;
  std::string abort_reason;

  nlohmann::json to_json() const;
};

/// Seeded training loop; writes the telemetry CSV and summary JSON named in
/// the config. A non-finite update stops the run and is recorded, not thrown.
RunSummary run_experiment(const ExperimentConfig& cfg);
RunSummary run_experiment(const ExperimentConfig& cfg, std::ostream* telemetry);

/// KRONOPT_THREADS if set and positive, else hardware concurrency.
unsigned thread_cap();

/// Runs configs concurrently (at most `threads`, 0 = thread_cap()). All
/// configs must share the same task spec, else ConfigError.
std::vector<RunSummary> compare_runs(const std::vector<ExperimentConfig>& configs,
                                     unsigned threads = 0);

void write_comparison_csv(const std::vector<RunSummary>& rows, std::ostream& out);
std::string format_comparison_table(const std::vector<RunSummary>& rows);

/// Shortest round-trip decimal form; "nan"/"inf" spelled out.
std::string format_double(double x);

}  // namespace kronopt::harness
