#include "wildfire/baseline_ga.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "wildfire/solver.hpp"

namespace wildfire {

std::vector<std::vector<int>> gene_options(const Instance& inst) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < inst.fire_count(); ++i)
    for (int l = 0; l < inst.drones; ++l) {
      std::vector<int> opts{-1};
      const int j = inst.home[l];
      if (inst.pi(i, j) && inst.available[l]) opts.push_back(j);
      out.push_back(std::move(opts));
    }
  return out;
}

Decision decode(const Chromosome& c, const Instance& inst) {
  const int L = inst.drones;
  if (c.genes.size() != static_cast<std::size_t>(inst.fire_count()) * L)
    throw std::invalid_argument("chromosome length does not match the instance");
  Decision d = Decision::zeros(inst);
  for (int i = 0; i < inst.fire_count(); ++i)
    for (int l = 0; l < L; ++l) {
      const int j = c.genes[static_cast<std::size_t>(i) * L + l];
      if (j < 0) continue;
      if (j != inst.home[l] || !inst.pi(i, j) || !inst.available[l])
        throw std::invalid_argument("gene holds an ineligible base");
      d.at(i, j, l) = 1;
    }
  d.derive_bases();
  return d;
}

namespace {

// Per-instance pieces shared by every fitness evaluation.
class FitnessContext {
 public:
  FitnessContext(const Instance& inst, const IcnnModel& sq, const Scenario& scenario)
      : inst_(inst), scenario_(scenario), oracle_(inst, sq), cons_(inst.bases), built_(inst.bases, 0) {
    for (int l = 0; l < inst.drones; ++l) {
      const int j = inst.home[l];
      if (!built_[j]) {
        cons_[j] = build_ccro(inst, scenario, l);
        built_[j] = 1;
      }
    }
  }

  FitnessBreakdown evaluate(const Chromosome& c) const {
    const Decision d = decode(c, inst_);
    FitnessBreakdown out;
    out.objective = objective(inst_, d, oracle_.value(d), scenario_);

    double v2 = 0.0;
    for (const auto& v : check_deterministic(inst_, d, scenario_))
      if (v.kind == ConstraintKind::Battery || v.kind == ConstraintKind::Capacity)
        v2 += v.amount * v.amount;

    for (int l = 0; l < inst_.drones; ++l) {
      const auto x = drone_columns(inst_, d, l);
      std::vector<int> support;
      for (std::size_t e = 0; e < x.size(); ++e)
        if (x[e] > 0.5) support.push_back(static_cast<int>(e));
      if (support.empty()) continue;
      const auto& con = cons_[inst_.home[l]];
      const auto m = argmax_selector(x, con.dist);
      const std::size_t n = x.size();
      double mean = 0.0, var = 0.0;
      for (int a : support) {
        const double wa = 2.0 * x[a] - m[a];
        mean += con.c[a] * wa;
        for (int b : support) var += wa * (2.0 * x[b] - m[b]) * con.S[a * n + b];
      }
      const double over = mean + std::sqrt(con.k * std::max(0.0, var)) - scenario_.period;
      if (over > 0.0) v2 += over * over;
    }
    out.violation_sq = v2;
    out.feasible = v2 == 0.0;
    out.penalty = 1e3 * (scenario_.w1 + scenario_.w2 + scenario_.w3) * v2;
    return out;
  }

 private:
  const Instance& inst_;
  const Scenario& scenario_;
  CostOracle oracle_;
  std::vector<CcroConstraint> cons_;
  std::vector<int> built_;
};

}  // namespace

FitnessBreakdown evaluate_fitness(const Chromosome& c, const Instance& inst, const IcnnModel& sq,
                                  const Scenario& scenario) {
  return FitnessContext(inst, sq, scenario).evaluate(c);
}

double fitness(const Chromosome& c, const Instance& inst, const IcnnModel& sq,
               const Scenario& scenario) {
  return evaluate_fitness(c, inst, sq, scenario).fitness();
}

GaResult ga_plan_instance(const Instance& inst, const IcnnModel& sq, const Scenario& scenario,
                          std::uint64_t seed, const GaConfig& cfg) {
  if (cfg.population < 2 || cfg.generations < 0 || cfg.tournament < 1)
    throw std::invalid_argument("bad GA config");
  GaResult out;
  const auto options = gene_options(inst);
  const std::size_t n = options.size();
  if (n == 0) {
    out.decision = Decision::zeros(inst);
    const CostOracle oracle(inst, sq);
    out.value = objective(inst, out.decision, oracle.value(out.decision), scenario);
    out.fitness = out.value;
    out.feasible = true;
    return out;
  }

  std::mt19937_64 rng(seed);
  auto random_gene = [&](std::size_t g) {
    const auto& o = options[g];
    return o[std::uniform_int_distribution<std::size_t>(0, o.size() - 1)(rng)];
  };

  std::vector<Chromosome> pop(cfg.population);
  for (auto& c : pop) {
    c.genes.resize(n);
    for (std::size_t g = 0; g < n; ++g) c.genes[g] = random_gene(g);
  }
  std::vector<FitnessBreakdown> fit(cfg.population);
  const FitnessContext context(inst, sq, scenario);
  auto evaluate = [&]() {
    const int p = static_cast<int>(pop.size());
#pragma omp parallel for schedule(dynamic) if (cfg.policy == ExecPolicy::Parallel)
    for (int k = 0; k < p; ++k) fit[k] = context.evaluate(pop[k]);
  };

  Chromosome best_any, best_feasible;
  FitnessBreakdown best_any_fit, best_feasible_fit;
  bool have_any = false, have_feasible = false;
  auto record = [&]() {
    for (std::size_t k = 0; k < pop.size(); ++k) {
      const double f = fit[k].fitness();
      if (!have_any || f < best_any_fit.fitness()) {
        best_any = pop[k];
        best_any_fit = fit[k];
        have_any = true;
      }
      if (fit[k].feasible && (!have_feasible || f < best_feasible_fit.fitness())) {
        best_feasible = pop[k];
        best_feasible_fit = fit[k];
        have_feasible = true;
      }
    }
    out.best_fitness.push_back(best_any_fit.fitness());
  };

  evaluate();
  record();
  auto tournament = [&]() -> const Chromosome& {
    std::size_t best = std::uniform_int_distribution<std::size_t>(0, pop.size() - 1)(rng);
    for (int r = 1; r < cfg.tournament; ++r) {
      const std::size_t k = std::uniform_int_distribution<std::size_t>(0, pop.size() - 1)(rng);
      if (fit[k].fitness() < fit[best].fitness()) best = k;
    }
    return pop[best];
  };

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int gen = 0; gen < cfg.generations; ++gen) {
    std::vector<std::size_t> order(pop.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fit[a].fitness() < fit[b].fitness(); });
    std::vector<Chromosome> next;
    next.reserve(pop.size());
    for (int e = 0; e < cfg.elites && e < static_cast<int>(pop.size()); ++e) next.push_back(pop[order[e]]);
    while (next.size() < pop.size()) {
      Chromosome a = tournament();
      Chromosome b = tournament();
      if (u01(rng) < cfg.crossover_rate)
        for (std::size_t g = 0; g < n; ++g)
          if (u01(rng) < 0.5) std::swap(a.genes[g], b.genes[g]);
      for (auto* c : {&a, &b}) {
        for (std::size_t g = 0; g < n; ++g)
          if (u01(rng) < cfg.mutation_rate) c->genes[g] = random_gene(g);
      }
      next.push_back(std::move(a));
      if (next.size() < pop.size()) next.push_back(std::move(b));
    }
    pop = std::move(next);
    evaluate();
    record();
  }

  const Chromosome& chosen = have_feasible ? best_feasible : best_any;
  out.decision = decode(chosen, inst);
  out.fitness = have_feasible ? best_feasible_fit.fitness() : best_any_fit.fitness();
  out.value = have_feasible ? best_feasible_fit.objective : best_any_fit.objective;
  out.feasible = have_feasible;
  return out;
}

GaResult ga_plan(const FireMap& map, const Scenario& scenario, const FleetState& fleet,
                 const IcnnModel& sq, std::uint64_t seed, const GaConfig& cfg) {
  return ga_plan_instance(extract_instance(map, scenario, fleet), sq, scenario, seed, cfg);
}

}  // namespace wildfire
