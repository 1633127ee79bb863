#include "kronopt/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "kronopt/error.hpp"

namespace kronopt::harness {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read_unsigned(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) {
    config_error(where + "." + key + " must be a non-negative integer");
  }
  out = static_cast<T>(v.get<unsigned long long>());
}

TaskSpec task_from_json(const json& j) {
  reject_unknown(j, {"name", "m", "n", "k", "hidden", "seed", "noise", "batch_size", "dataset_csv"},
                 "task");
  TaskSpec t;
  read(j, "name", t.name, "task");
  read_unsigned(j, "m", t.m, "task");
  read_unsigned(j, "n", t.n, "task");
  read_unsigned(j, "k", t.k, "task");
  read_unsigned(j, "hidden", t.hidden, "task");
  read_unsigned(j, "seed", t.seed, "task");
  read(j, "noise", t.noise, "task");
  read_unsigned(j, "batch_size", t.batch_size, "task");
  read(j, "dataset_csv", t.dataset_csv, "task");
  return t;
}

RefreshPolicy policy_from_json(const json& j) {
  reject_unknown(j, {"mode", "tau", "frequency", "max_qr_iters"}, "optimizer.refresh");
  RefreshPolicy p;
  std::string mode = std::string(to_string(p.mode));
  read(j, "mode", mode, "optimizer.refresh");
  p.mode = parse_refresh_mode(mode);
  read(j, "tau", p.tau, "optimizer.refresh");
  read(j, "frequency", p.frequency, "optimizer.refresh");
  read(j, "max_qr_iters", p.max_qr_iters, "optimizer.refresh");
  return p;
}

void optimizer_from_json(const json& j, OptimizerConfig& o) {
  const std::string w = "optimizer";
  reject_unknown(j, {"variant", "correction_mode", "lr", "beta2", "beta3", "epsilon", "exponent",
                     "weight_decay", "max_preconditioner_dim", "refresh"},
                 w);
  std::string variant = std::string(to_string(o.variant));
  std::string corr = std::string(to_string(o.correction));
  read(j, "variant", variant, w);
  read(j, "correction_mode", corr, w);
  o.variant = parse_variant(variant);
  o.correction = parse_correction_mode(corr);
  read(j, "lr", o.schedule.base_lr, w);
  read(j, "beta2", o.beta2, w);
  if (j.contains("beta3") && !j.at("beta3").is_null()) {
    double b3 = 0.0;
    read(j, "beta3", b3, w);
    o.beta3 = b3;
  }
  read(j, "epsilon", o.epsilon, w);
  read(j, "exponent", o.exponent, w);
  read(j, "weight_decay", o.weight_decay, w);
  read_unsigned(j, "max_preconditioner_dim", o.max_preconditioner_dim, w);
  if (j.contains("refresh")) o.policy = policy_from_json(j.at("refresh"));
}

void schedule_from_json(const json& j, LrSchedule& s, std::int64_t steps) {
  reject_unknown(j, {"kind", "warmup_steps", "total_steps"}, "schedule");
  std::string kind = "constant";
  read(j, "kind", kind, "schedule");
  if (kind == "constant") {
    s.kind = LrSchedule::Kind::constant;
  } else if (kind == "linear_warmup_cosine") {
    s.kind = LrSchedule::Kind::linear_warmup_cosine;
  } else {
    config_error("unknown schedule kind '" + kind + "'");
  }
  s.total_steps = steps;
  read(j, "warmup_steps", s.warmup_steps, "schedule");
  read(j, "total_steps", s.total_steps, "schedule");
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::unique_ptr<tasks::Task> make_task(const TaskSpec& spec) {
  if (spec.name == "kron_quadratic") {
    return std::make_unique<tasks::KronQuadratic>(spec.m, spec.n, spec.seed, spec.noise);
  }
  if (spec.name == "matrix_regression") {
    return std::make_unique<tasks::MatrixRegression>(spec.m, spec.n, spec.k, spec.seed,
                                                     spec.batch_size);
  }
  if (spec.name == "mlp_toy") {
    if (!spec.dataset_csv.empty()) {
      return std::make_unique<tasks::MlpToy>(tasks::read_dataset_csv(spec.dataset_csv), spec.hidden,
                                             spec.batch_size);
    }
    return std::make_unique<tasks::MlpToy>(spec.hidden, spec.seed, spec.batch_size);
  }
  config_error("unknown task '" + spec.name + "'");
}

void ExperimentConfig::validate() const {
  if (steps < 1) config_error("steps must be >= 1");
  if (telemetry_every < 1) config_error("telemetry_every must be >= 1");
  if (task.name != "kron_quadratic" && task.name != "matrix_regression" && task.name != "mlp_toy") {
    config_error("unknown task '" + task.name + "'");
  }
  if (task.m == 0 || task.n == 0 || task.k == 0 || task.hidden == 0) {
    config_error("task dimensions must be >= 1");
  }
  if (!(task.noise >= 0.0)) config_error("task.noise must be >= 0");
  optimizer.validate();
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j, {"name", "task", "optimizer", "schedule", "steps", "telemetry_every",
                     "target_loss", "seed", "output", "record_wall_clock"},
                 "config");
  ExperimentConfig c;
  read(j, "name", c.name, "config");
  read(j, "steps", c.steps, "config");
  read(j, "telemetry_every", c.telemetry_every, "config");
  if (j.contains("target_loss") && !j.at("target_loss").is_null()) {
    double t = 0.0;
    read(j, "target_loss", t, "config");
    c.target_loss = t;
  }
  read_unsigned(j, "seed", c.seed, "config");
  read(j, "record_wall_clock", c.record_wall_clock, "config");
  if (!j.contains("task")) config_error("config.task is required");
  c.task = task_from_json(j.at("task"));
  if (j.contains("optimizer")) optimizer_from_json(j.at("optimizer"), c.optimizer);
  c.optimizer.schedule.total_steps = c.steps;
  if (j.contains("schedule")) schedule_from_json(j.at("schedule"), c.optimizer.schedule, c.steps);
  if (j.contains("output")) {
    const json& o = j.at("output");
    reject_unknown(o, {"telemetry_csv", "summary_json"}, "output");
    read(o, "telemetry_csv", c.telemetry_csv, "output");
    read(o, "summary_json", c.summary_json, "output");
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const OptimizerConfig& o = c.optimizer;
  json j;
  j["name"] = c.name;
  j["task"] = {{"name", c.task.name},     {"m", c.task.m},
               {"n", c.task.n},           {"k", c.task.k},
               {"hidden", c.task.hidden}, {"seed", c.task.seed},
               {"noise", c.task.noise},   {"batch_size", c.task.batch_size}};
  if (!c.task.dataset_csv.empty()) j["task"]["dataset_csv"] = c.task.dataset_csv;
  j["optimizer"] = {{"variant", to_string(o.variant)},
                    {"correction_mode", to_string(o.correction)},
                    {"lr", o.schedule.base_lr},
                    {"beta2", o.beta2},
                    {"beta3", o.beta3 ? json(*o.beta3) : json(nullptr)},
                    {"epsilon", o.epsilon},
                    {"exponent", o.exponent},
                    {"weight_decay", o.weight_decay},
                    {"max_preconditioner_dim", o.max_preconditioner_dim},
                    {"refresh",
                     {{"mode", to_string(o.policy.mode)},
                      {"tau", o.policy.tau},
                      {"frequency", o.policy.frequency},
                      {"max_qr_iters", o.policy.max_qr_iters}}}};
  j["schedule"] = {
      {"kind", o.schedule.kind == LrSchedule::Kind::constant ? "constant" : "linear_warmup_cosine"},
      {"warmup_steps", o.schedule.warmup_steps},
      {"total_steps", o.schedule.total_steps}};
  j["steps"] = c.steps;
  j["telemetry_every"] = c.telemetry_every;
  j["target_loss"] = c.target_loss ? json(*c.target_loss) : json(nullptr);
  j["seed"] = c.seed;
  j["output"] = {{"telemetry_csv", c.telemetry_csv}, {"summary_json", c.summary_json}};
  j["record_wall_clock"] = c.record_wall_clock;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json RunSummary::to_json() const {
  json j;
  j["name"] = name;
  j["variant"] = variant;
  j["steps_completed"] = steps_completed;
  j["initial_loss"] = initial_loss;
  j["final_loss"] = final_loss;
  j["steps_to_target"] = steps_to_target ? json(*steps_to_target) : json(nullptr);
  j["total_eig_count"] = total_eig_count;
  j["total_qr_iters"] = total_qr_iters;
  j["factors"] = json::array();
  for (const auto& f : factors) {
    j["factors"].push_back(
        {{"block", f.block}, {"factor", f.factor}, {"eig_count", f.eig_count}, {"qr_iters", f.qr_iters}});
  }
  j["eig_per_step"] = eig_per_step;
  j["loss_curve"] = json::array();
  for (const auto& [s, l] : loss_curve) j["loss_curve"].push_back({s, l});
  j["wall_ms"] = wall_ms;
  j["aborted_at"] = aborted_at ? json(*aborted_at) : json(nullptr);
  if (aborted_at) j["abort_reason"] = abort_reason;
  return j;
}

RunSummary run_experiment(const ExperimentConfig& cfg) {
  if (cfg.telemetry_csv.empty()) return run_experiment(cfg, nullptr);
  std::ofstream out(cfg.telemetry_csv);
  if (!out) config_error("cannot write " + cfg.telemetry_csv);
  return run_experiment(cfg, &out);
}

RunSummary run_experiment(const ExperimentConfig& cfg, std::ostream* telemetry) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed_ms = [&] {
    if (!cfg.record_wall_clock) return 0.0;
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  const auto task = make_task(cfg.task);
  tasks::Params params = task->initial_params(cfg.seed);
  std::vector<ParamBlock> blocks;
  blocks.reserve(params.size());
  for (const Matrix& p : params) blocks.push_back(ParamBlock::create(p, cfg.optimizer));

  RunSummary s;
  s.name = cfg.name;
  s.variant = std::string(to_string(cfg.optimizer.variant));
  s.initial_loss = task->loss(params);
  s.final_loss = s.initial_loss;
  s.eig_per_step.reserve(static_cast<std::size_t>(cfg.steps));

  if (telemetry) *telemetry << kCsvHeader << '\n';

  std::int64_t prev_eigs = 0;
  std::vector<StepReport> reports(blocks.size());
  for (std::int64_t t = 1; t <= cfg.steps; ++t) {
    const tasks::Params grads = task->batch_grad(params, tasks::mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    try {
      for (const Matrix& g : grads) {
        if (!all_finite(g)) {
          throw Error(ErrorKind::NonFiniteUpdate, "non-finite gradient at step " + std::to_string(t));
        }
      }
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        reports[b] = step(blocks[b], grads[b], cfg.optimizer, t);
        params[b] = blocks[b].weight;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFiniteUpdate) throw;
      s.aborted_at = t;
      s.abort_reason = e.what();
      break;
    }
    s.steps_completed = t;

    std::int64_t eigs = 0;
    for (const auto& r : reports)
      for (const auto& f : r.factors) eigs += f.eig_count;
    s.eig_per_step.push_back(eigs - prev_eigs);
    prev_eigs = eigs;

    if (t % cfg.telemetry_every != 0 && t != cfg.steps) continue;
    const double loss = task->loss(params);
    s.final_loss = loss;
    s.loss_curve.emplace_back(t, loss);
    if (cfg.target_loss && !s.steps_to_target && loss <= *cfg.target_loss) s.steps_to_target = t;
    if (!telemetry) continue;

    const std::string lead = std::to_string(t) + ',' + format_double(loss) + ',' +
                             format_double(tasks::params_norm(grads)) + ',';
    const std::string wall = format_double(elapsed_ms());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const StepReport& r = reports[b];
      const std::string tail = ',' + format_double(r.update_norm) + ',' + csv_optional(r.graft_norm) +
                               ',' + wall + '\n';
      if (r.factors.empty()) {
        *telemetry << lead << b << ",none,,NoCheck,0,0" << tail;
        continue;
      }
      for (const FactorReport& f : r.factors) {
        *telemetry << lead << b << ',' << f.name << ',' << csv_optional(f.decision.criterion) << ','
                   << to_string(f.decision.kind) << ',' << f.decision.qr_iters << ',' << f.eig_count
                   << tail;
      }
    }
  }
  if (s.aborted_at && s.steps_completed > 0) s.final_loss = task->loss(params);

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto add = [&](const std::optional<FactorState>& f, const char* name) {
      if (!f) return;
      s.factors.push_back({b, name, f->eig_count(), f->qr_iter_count()});
      s.total_eig_count += f->eig_count();
      s.total_qr_iters += f->qr_iter_count();
    };
    add(blocks[b].left, "left");
    add(blocks[b].right, "right");
    add(blocks[b].full, "full");
  }
  s.wall_ms = elapsed_ms();

  if (!cfg.summary_json.empty()) {
    std::ofstream out(cfg.summary_json);
    if (!out) config_error("cannot write " + cfg.summary_json);
    out << s.to_json().dump(2) << '\n';
  }
  return s;
}

unsigned thread_cap() {
  if (const char* env = std::getenv("KRONOPT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunSummary> compare_runs(const std::vector<ExperimentConfig>& configs,
                                     unsigned threads) {
  if (configs.empty()) return {};
  for (const auto& c : configs) {
    if (!(c.task == configs.front().task)) {
      config_error("compare_runs: '" + c.name + "' uses a different task than '" +
                   configs.front().name + "'");
    }
    c.validate();
  }
  if (threads == 0) threads = thread_cap();
  threads = std::min<unsigned>(threads, static_cast<unsigned>(configs.size()));

  std::vector<RunSummary> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next == configs.size()) return;
        i = next++;
      }
      try {
        out[i] = run_experiment(configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_comparison_csv(const std::vector<RunSummary>& rows, std::ostream& out) {
  out << "name,variant,final_loss,steps_to_target,wall_ms,eig_count,qr_iters,aborted_at\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.variant << ',' << format_double(r.final_loss) << ','
        << (r.steps_to_target ? std::to_string(*r.steps_to_target) : "") << ','
        << format_double(r.wall_ms) << ',' << r.total_eig_count << ',' << r.total_qr_iters << ','
        << (r.aborted_at ? std::to_string(*r.aborted_at) : "") << '\n';
  }
}

std::string format_comparison_table(const std::vector<RunSummary>& rows) {
  std::size_t wname = 4;
  std::size_t wvar = 7;
  for (const auto& r : rows) {
    wname = std::max(wname, r.name.size());
    wvar = std::max(wvar, r.variant.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(wname)) << "name" << "  "
     << std::setw(static_cast<int>(wvar)) << "variant" << "  " << std::right << std::setw(14)
     << "final_loss" << "  " << std::setw(9) << "to_target" << "  " << std::setw(10) << "wall_ms"
     << "  " << std::setw(6) << "eigs" << "  " << std::setw(8) << "qr_iters" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(wname)) << r.name << "  "
       << std::setw(static_cast<int>(wvar)) << r.variant << "  " << std::right << std::setw(14)
       << std::setprecision(6) << r.final_loss << "  " << std::setw(9)
       << (r.steps_to_target ? std::to_string(*r.steps_to_target) : "-") << "  " << std::setw(10)
       << std::fixed << std::setprecision(1) << r.wall_ms << std::defaultfloat << "  "
       << std::setw(6) << r.total_eig_count << "  " << std::setw(8) << r.total_qr_iters;
    if (r.aborted_at) os << "  (aborted at step " << *r.aborted_at << ")";
    os << '\n';
  }
  return os.str();
}

}  // namespace kronopt::harness
