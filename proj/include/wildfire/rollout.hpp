#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wildfire/baseline_ga.hpp"
#include "wildfire/icnn.hpp"
#include "wildfire/model.hpp"
#include "wildfire/solver.hpp"

namespace wildfire {

enum class PlannerKind { MipCcro, MipPlain, Ga };
PlannerKind parse_planner(const std::string& s);
const char* to_string(PlannerKind p);

// Battery and overtime transition for one period. tau holds one realized
// delivery time per fire point of the instance.
// Throws std::runtime_error if a drone's residual battery goes negative.
FleetState advance_fleet(const FleetState& fleet, const Decision& d, const Instance& inst,
                         std::span<const double> tau, const Scenario& scenario);

// Every fire point receives exactly ceil(g) drones.
bool terminal_check(const Instance& inst, const Decision& d);
// Literal reading: assigned drones equal g itself.
bool terminal_exact_equality(const Instance& inst, const Decision& d);

// Lognormal delivery times with mean mu_i and variance Sigma_ii.
std::vector<double> sample_delivery_times(const Instance& inst, std::uint64_t seed);

enum class Termination { Extinguished, Uncontained };
const char* to_string(Termination t);

struct PeriodRecord {
  int t = 0;
  FireMap map;  // start of the slot
  std::vector<FirePoint> fires;
  Decision decision;
  std::vector<double> tau;
  double burn_cost = 0.0;       // C_t, burning cells at the start of the slot
  double next_burn_cost = 0.0;  // true C_{t+1}
  double predicted_cost = 0.0;  // SQ prediction of C_{t+1} under the decision
  int predicted_spread = -1;    // spread-model burning count with no action, -1 if not run
  double moves = 0.0;           // 2 sum x D
  int active_bases = 0;
  double plan_value = 0.0;
  bool plan_infeasible = false;
  bool coverage_required = false;
  bool coverage_met = false;
  bool coverage_exact = false;
  FleetState fleet_before;
  FleetState fleet_after;
  PlanStats stats;
};

struct EpisodeTrace {
  std::string scenario;
  PlannerKind planner = PlannerKind::MipCcro;
  std::uint64_t seed = 0;
  int horizon = 0;
  int width = 0;
  int height = 0;
  std::vector<GridPoint> bases;
  std::vector<PeriodRecord> periods;
  FireMap final_map;

  double moves = 0.0;
  int rounds = 0;  // periods with at least one assignment
  double burn_cost = 0.0;
  Termination status = Termination::Extinguished;
};

struct RolloutOptions {
  int horizon = 8;
  SolverOptions solver;
  GaConfig ga;
  const IcnnModel* s_model = nullptr;  // optional no-action spread forecast per period
};

EpisodeTrace run_episode(const FireMap& initial, const Scenario& scenario, PlannerKind planner,
                         const IcnnModel& sq, std::uint64_t seed, const RolloutOptions& opt = {});

// JSON lines: one record per period, then a summary record.
void write_trace_jsonl(std::ostream& os, const EpisodeTrace& trace);
void save_trace(const std::string& path, const EpisodeTrace& trace);
EpisodeTrace read_trace_jsonl(std::istream& is);
EpisodeTrace load_trace(const std::string& path);

}  // namespace wildfire
