#pragma once

#include <cstdint>
#include <vector>

#include "wildfire/icnn.hpp"
#include "wildfire/model.hpp"
#include "wildfire/parallel.hpp"

namespace wildfire {

struct GaConfig {
  int population = 60;
  int generations = 120;
  int tournament = 3;
  double crossover_rate = 0.8;
  double mutation_rate = 0.05;  // per gene
  int elites = 1;
  ExecPolicy policy = ExecPolicy::Parallel;
};

// One gene per (fire point, drone) slot, fire-major: -1 leaves the slot
// unassigned, otherwise the gene is the drone's home base. Slots whose base is
// ineligible only admit -1, so decoding never breaks eligibility.
struct Chromosome {
  std::vector<int> genes;
  bool operator==(const Chromosome&) const = default;
};

// Allowed values per slot; always starts with -1.
std::vector<std::vector<int>> gene_options(const Instance& inst);
Decision decode(const Chromosome& c, const Instance& inst);

struct FitnessBreakdown {
  double objective = 0.0;
  double penalty = 0.0;
  double violation_sq = 0.0;  // sum of squared violations
  bool feasible = true;
  double fitness() const { return objective + penalty; }
};

// Battery and intensity-cap excess plus the robust time overrun
// (T + sqrt(k V) - Delta)+ per drone, each squared and weighted by
// 1e3 (w1 + w2 + w3).
FitnessBreakdown evaluate_fitness(const Chromosome& c, const Instance& inst, const IcnnModel& sq,
                                  const Scenario& scenario);
double fitness(const Chromosome& c, const Instance& inst, const IcnnModel& sq,
               const Scenario& scenario);

struct GaResult {
  Decision decision;
  double value = 0.0;   // objective of the returned decision
  double fitness = 0.0;
  bool feasible = false;
  std::vector<double> best_fitness;  // per generation
};

GaResult ga_plan_instance(const Instance& inst, const IcnnModel& sq, const Scenario& scenario,
                          std::uint64_t seed, const GaConfig& cfg = {});
GaResult ga_plan(const FireMap& map, const Scenario& scenario, const FleetState& fleet,
                 const IcnnModel& sq, std::uint64_t seed, const GaConfig& cfg = {});

}  // namespace wildfire
