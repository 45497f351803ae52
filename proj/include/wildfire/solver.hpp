#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "wildfire/icnn.hpp"
#include "wildfire/model.hpp"

namespace wildfire {

enum class PlanMode { Ccro, Plain };
PlanMode parse_plan_mode(const std::string& s);
const char* to_string(PlanMode m);

struct SolverOptions {
  PlanMode mode = PlanMode::Ccro;
  bool require_coverage = false;  // every fire gets ceil(g) drones
  double tau_max = 0.0;           // plain mode; 0 = default_tau_max
  int node_limit = 100000;
  int restart_every = 64;
  int cut_rounds = 20;
  double integrality_tol = 1e-6;
  double feasibility_tol = 1e-7;
  double gap_tol = 1e-6;
};

// One-period objective pieces evaluated through the SQ model.
class CostOracle {
 public:
  CostOracle(const Instance& inst, const IcnnModel& sq);
  // C_{t+1} for the quench fractions implied by per-fire loads.
  double value(std::span<const double> fire_load) const;
  // Value and derivative with respect to each fire's load.
  double value_gradient(std::span<const double> fire_load, std::vector<double>& grad) const;
  double value(const Decision& d) const;

 private:
  const Instance& inst_;
  const IcnnModel& sq_;
  std::vector<double> state_;
};

struct SubproblemResult {
  bool feasible = false;
  Decision decision;
  double value = 0.0;  // w1 C + w3 sum 2 x D
  double bound = 0.0;  // proven lower bound on the optimum (+inf when infeasible)
  bool cut_off = false;  // nothing below the cutoff; only `bound` is meaningful
  int nodes = 0;
  int cuts = 0;
  bool node_limit_hit = false;
};

// Branch-and-cut over x with the base pattern fixed. Nodes whose bound
// reaches `cutoff` are pruned; if no solution beats it the result is
// infeasible with cut_off set and bound = cutoff.
SubproblemResult solve_subproblem(const Instance& inst, const std::vector<std::uint8_t>& bases,
                                  const IcnnModel& sq, const Scenario& scenario,
                                  const SolverOptions& opt = {},
                                  double cutoff = std::numeric_limits<double>::infinity());

struct BendersCut {
  std::vector<std::uint8_t> pattern;
  double value = 0.0;        // subproblem value at the pattern
  bool feasibility = false;  // pattern is infeasible
};

struct BendersState {
  std::vector<BendersCut> cuts;
  // Lower bound on every pattern's subproblem value: opening bases only adds
  // options, so the all-open optimum bounds every other pattern from below.
  double floor = 0.0;
  bool has_incumbent = false;
  Decision incumbent;
  std::vector<std::uint8_t> incumbent_pattern;
  double incumbent_value = 0.0;
  double bound = 0.0;
  int iterations = 0;
  std::vector<double> bound_history;

  double gap() const { return has_incumbent ? incumbent_value - bound : kInfinity; }
  static constexpr double kInfinity = 1e300;
};

struct MasterResult {
  bool feasible = false;  // false once every pattern is excluded
  std::vector<std::uint8_t> pattern;
  double bound = 0.0;
};

// Master value of a pattern: w2 |b| + max(floor, max over optimality cuts of
// v_P (1 - Hamming(b, P))), or +inf if a feasibility cut excludes it.
double master_value(const std::vector<std::uint8_t>& pattern, const BendersState& state,
                    const Scenario& scenario);
// Enumerates all 2^J patterns, lowest mask first on ties. Throws for J > 12.
MasterResult solve_master(const Instance& inst, const BendersState& state,
                          const Scenario& scenario);

struct PlanStats {
  int iterations = 0;
  int nodes = 0;
  int cuts = 0;
  double value = 0.0;
  double gap = 0.0;
  double wall_ms = 0.0;
  double predicted_cost = 0.0;
  bool infeasible = false;
  bool node_limit_hit = false;
};

struct PlanResult {
  Decision decision;
  double value = 0.0;
  PlanStats stats;
};

PlanResult plan_instance(const Instance& inst, const IcnnModel& sq, const Scenario& scenario,
                         const SolverOptions& opt = {});
PlanResult plan_period(const FireMap& map, const Scenario& scenario, const FleetState& fleet,
                       const IcnnModel& sq, const SolverOptions& opt = {});

struct ExactResult {
  bool feasible = false;
  Decision decision;
  double value = 0.0;
};

// Brute force over every x on eligible (i, home(l), l) entries with b set to
// the used bases. Requires I * J * L <= 16.
ExactResult enumerate_exact(const Instance& inst, const IcnnModel& sq, const Scenario& scenario,
                            const SolverOptions& opt = {});

// The time predicate used by both the solver and the oracle.
bool time_feasible(const Instance& inst, const Decision& d, const Scenario& scenario,
                   const SolverOptions& opt);

std::string stats_csv_header();
std::string stats_csv_row(const std::string& id, const Instance& inst, const PlanStats& s);

}  // namespace wildfire
