#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wildfire/parallel.hpp"
#include "wildfire/rollout.hpp"

namespace wildfire {

struct BenchTraining {
  bool enabled = false;  // train missing models instead of failing
  int environments = 36;
  int horizon = 9;
  bool augment = true;
  int epochs = 20;
  double learning_rate = 1.0;
  std::uint64_t seed = 1;
};

struct BenchConfig {
  std::vector<std::string> scenarios;
  int grid = 20;
  int environments = 0;  // 0: every listed scenario
  int horizon = 8;
  std::vector<PlannerKind> planners;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "bench_out";
  std::string s_model;
  std::string sq_model;
  BenchTraining training;
  bool render = false;

  // Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

// Relative paths in the file resolve against `base_dir`.
BenchConfig parse_bench_config(const std::string& text, const std::string& base_dir = ".");
BenchConfig load_bench_config(const std::string& path);

struct BenchRow {
  std::string environment;
  PlannerKind planner = PlannerKind::MipCcro;
  std::uint64_t seed = 0;
  double moves = 0.0;
  int rounds = 0;
  double burn_cost = 0.0;
  Termination status = Termination::Extinguished;
  int final_burning = 0;
  double wall_ms = 0.0;
};

struct PlannerSummary {
  PlannerKind planner = PlannerKind::MipCcro;
  int episodes = 0;
  double mean_moves = 0.0;
  double mean_rounds = 0.0;
  double mean_burn_cost = 0.0;
  int uncontained = 0;
};

struct Reduction {
  std::string environment;
  double moves_plain = 0.0;  // mean over seeds
  double moves_ccro = 0.0;
  double percent = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<PlannerSummary> planners;
  std::vector<Reduction> reductions;  // empty unless both MIP planners ran
  double mean_reduction = 0.0;
};

// 100 (plain - ccro) / plain, or 0 when plain is 0.
double reduction_percent(double moves_plain, double moves_ccro);

// Aggregates and reductions recomputed from rows.
BenchReport aggregate(std::vector<BenchRow> rows);

// Runs every (environment, planner, seed) cell, writes report.csv,
// summary.csv, reduction.csv, timing.csv and traces/*.jsonl under the output
// directory. Rows are ordered by environment, planner, seed regardless of the
// execution order.
BenchReport run_bench(const BenchConfig& config, ExecPolicy policy = ExecPolicy::Parallel);

void write_report_csv(std::ostream& os, const BenchReport& r);
void write_summary_csv(std::ostream& os, const BenchReport& r);
void write_reduction_csv(std::ostream& os, const BenchReport& r);
void write_timing_csv(std::ostream& os, const BenchReport& r);

}  // namespace wildfire
