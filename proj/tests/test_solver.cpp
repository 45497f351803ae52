#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "support.hpp"
#include "wildfire/scenario_io.hpp"
#include "wildfire/solver.hpp"

using namespace wildfire;
using wildfire::testing::random_tiny_case;
using wildfire::testing::tiny_sq_model;

namespace {

const IcnnModel& tiny_sq() {
  static const IcnnModel m = tiny_sq_model();
  return m;
}

Instance bare_instance(int bases) {
  Instance inst;
  inst.bases = bases;
  return inst;
}

Scenario unit_scenario() {
  Scenario sc;
  sc.w1 = sc.w2 = sc.w3 = 1.0;
  return sc;
}

// Per-drone time check written against the model-level predicates only.
bool drones_on_time(const Instance& inst, const Decision& d, const Scenario& sc, PlanMode mode,
                    double tau_max) {
  for (int l = 0; l < inst.drones; ++l) {
    const bool ok = mode == PlanMode::Ccro ? cantelli_feasible(inst, d, sc, l)
                                           : plain_time_feasible(inst, d, sc, l, tau_max);
    if (!ok) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("master without cuts opens nothing") {
  const Instance inst = bare_instance(3);
  const Scenario sc = unit_scenario();
  BendersState state;
  const auto m = solve_master(inst, state, sc);
  REQUIRE(m.feasible);
  CHECK(m.pattern == std::vector<std::uint8_t>{0, 0, 0});
  CHECK(m.bound == 0.0);
}

TEST_CASE("an optimality cut lifts the bound at its pattern") {
  const Instance inst = bare_instance(2);
  const Scenario sc = unit_scenario();
  BendersState state;
  state.cuts.push_back({{1, 0}, 7.5, false});
  CHECK(master_value({1, 0}, state, sc) >= 7.5);
  CHECK(master_value({1, 0}, state, sc) == doctest::Approx(8.5));
  // one flip away the cut is void
  CHECK(master_value({0, 0}, state, sc) == 0.0);
  CHECK(master_value({1, 1}, state, sc) == doctest::Approx(2.0));
  const auto m = solve_master(inst, state, sc);
  CHECK(m.pattern == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("feasibility cuts exclude patterns") {
  const Instance inst = bare_instance(3);
  const Scenario sc = unit_scenario();
  BendersState state;
  state.cuts.push_back({{0, 0, 0}, 0.0, true});
  state.cuts.push_back({{1, 0, 0}, 0.0, true});
  state.cuts.push_back({{0, 1, 0}, 0.0, true});
  state.cuts.push_back({{0, 0, 1}, 0.0, true});
  CHECK(std::isinf(master_value({0, 1, 0}, state, sc)));
  const auto m = solve_master(inst, state, sc);
  REQUIRE(m.feasible);
  CHECK(m.pattern == std::vector<std::uint8_t>{1, 1, 0});
  CHECK(m.bound == doctest::Approx(2.0));

  for (unsigned mask = 0; mask < 8; ++mask)
    state.cuts.push_back({{std::uint8_t(mask & 1), std::uint8_t((mask >> 1) & 1),
                           std::uint8_t((mask >> 2) & 1)},
                          0.0, true});
  CHECK_FALSE(solve_master(inst, state, sc).feasible);
}

TEST_CASE("the floor bounds every pattern") {
  const Instance inst = bare_instance(2);
  Scenario sc = unit_scenario();
  sc.w2 = 0.5;
  BendersState state;
  state.floor = 4.0;
  for (const auto& p : std::vector<std::vector<std::uint8_t>>{{0, 0}, {0, 1}, {1, 1}})
    CHECK(master_value(p, state, sc) >= 4.0);
  CHECK(solve_master(inst, state, sc).bound == doctest::Approx(4.0));
}

TEST_CASE("master bound never drops as cuts accumulate") {
  std::mt19937_64 rng(8);
  const Instance inst = bare_instance(4);
  const Scenario sc = unit_scenario();
  BendersState state;
  double last = solve_master(inst, state, sc).bound;
  for (int k = 0; k < 40; ++k) {
    BendersCut cut;
    for (int j = 0; j < 4; ++j) cut.pattern.push_back(rng() % 2);
    cut.feasibility = rng() % 5 == 0;
    cut.value = static_cast<double>(rng() % 100) / 10.0;
    state.cuts.push_back(cut);
    const auto m = solve_master(inst, state, sc);
    if (!m.feasible) break;
    CHECK(m.bound >= last - 1e-12);
    last = m.bound;
  }
}

TEST_CASE("master enumeration is limited to twelve bases") {
  const Scenario sc = unit_scenario();
  CHECK_THROWS_AS(solve_master(bare_instance(13), BendersState{}, sc), std::invalid_argument);
}

TEST_CASE("no fires gives the all-zero plan") {
  Scenario sc;
  sc.width = sc.height = 8;
  sc.bases = {{1, 1}, {6, 6}};
  sc.drones = {{0, 30.0}, {1, 30.0}};
  sc.validate();
  const FireMap empty(8, 8, true);
  const auto res = plan_period(empty, sc, FleetState::fresh(2), tiny_sq());
  CHECK(res.decision.assignments() == 0);
  CHECK(res.decision.b == std::vector<std::uint8_t>{0, 0});
  CHECK(res.value == doctest::Approx(sc.w1 * res.stats.predicted_cost));
}

TEST_CASE("plans match exhaustive enumeration on tiny instances") {
  std::mt19937_64 rng(2024);
  int compared = 0, infeasible = 0, nonzero = 0;
  while (compared < 240) {
    const auto tc = random_tiny_case(rng);
    if (!tc) continue;
    for (PlanMode mode : {PlanMode::Ccro, PlanMode::Plain})
      for (bool cover : {false, true}) {
        SolverOptions opt;
        opt.mode = mode;
        opt.require_coverage = cover;
        const auto exact = enumerate_exact(tc->instance, tiny_sq(), tc->scenario, opt);
        const auto plan = plan_instance(tc->instance, tiny_sq(), tc->scenario, opt);
        ++compared;
        CHECK(plan.stats.infeasible == !exact.feasible);
        if (!exact.feasible) {
          ++infeasible;
          continue;
        }
        CHECK(std::abs(plan.value - exact.value) <= 1e-6);
        if (plan.decision.assignments() > 0) ++nonzero;
        // the incumbent itself is feasible
        CHECK(check_deterministic(tc->instance, plan.decision, tc->scenario).empty());
        CHECK(time_feasible(tc->instance, plan.decision, tc->scenario, opt));
        CHECK(drones_on_time(tc->instance, plan.decision, tc->scenario, mode,
                             default_tau_max(tc->instance, tc->scenario)));
        for (int i = 0; i < tc->instance.fire_count(); ++i) {
          if (cover) CHECK(plan.decision.fire_load(i) == tc->instance.fires[i].cap);
        }
      }
  }
  CHECK(nonzero >= 40);
  CHECK(infeasible < compared);
}

TEST_CASE("dropping the robust rows never raises the optimum") {
  // plain timing with a vanishing service bound is a relaxation of the
  // Cantelli row whenever mean delivery times are nonnegative
  std::mt19937_64 rng(77);
  int seen = 0;
  while (seen < 60) {
    const auto tc = random_tiny_case(rng);
    if (!tc) continue;
    ++seen;
    SolverOptions robust;
    SolverOptions relaxed;
    relaxed.mode = PlanMode::Plain;
    relaxed.tau_max = 1e-12;
    const auto a = plan_instance(tc->instance, tiny_sq(), tc->scenario, robust);
    const auto b = plan_instance(tc->instance, tiny_sq(), tc->scenario, relaxed);
    CHECK(b.value <= a.value + 1e-9);
  }
}

TEST_CASE("outer-approximation cuts hold at every Cantelli-feasible point") {
  // tangent of c^T w + sqrt(k w^T S w) at any w0, and the diagonal row used
  // when S is entrywise nonnegative and at most `most` sorties fit
  std::mt19937_64 rng(5);
  int checked = 0;
  while (checked < 40) {
    const auto tc = random_tiny_case(rng);
    if (!tc) continue;
    const Instance& inst = tc->instance;
    for (int l = 0; l < inst.drones; ++l) {
      const auto con = build_ccro(inst, tc->scenario, l);
      const int n = con.size();
      if (n == 0 || n > 4) continue;
      ++checked;
      const auto points = wildfire::testing::all_binary(n);
      std::vector<std::vector<double>> feasible;
      int most = 0;
      for (const auto& x : points) {
        if (!cantelli_feasible(con, x)) continue;
        feasible.push_back(x);
        int count = 0;
        for (double v : x) count += v > 0.5;
        most = std::max(most, count);
      }
      auto w_of = [&](const std::vector<double>& x) {
        const auto m = argmax_selector(x, con.dist);
        std::vector<double> w(n);
        for (int e = 0; e < n; ++e) w[e] = 2.0 * x[e] - m[e];
        return w;
      };
      for (const auto& x0 : points) {
        const auto w0 = w_of(x0);
        const double v0 = con.variance(w0);
        if (v0 <= 1e-12) continue;
        std::vector<double> g(n, 0.0);
        for (int r = 0; r < n; ++r)
          for (int q = 0; q < n; ++q) g[r] += con.S[static_cast<std::size_t>(r) * n + q] * w0[q];
        for (const auto& x : feasible) {
          const auto w = w_of(x);
          double lhs = con.mean_time(w);
          for (int e = 0; e < n; ++e) lhs += std::sqrt(con.k / v0) * g[e] * w[e];
          CHECK(lhs <= con.period + 1e-9);
        }
      }
      if (most > 0 && con.nonnegative()) {
        for (const auto& x : feasible) {
          const auto w = w_of(x);
          double lhs = 0.0;
          for (int e = 0; e < n; ++e)
            lhs += (con.c[e] + std::sqrt(con.k * con.S[static_cast<std::size_t>(e) * n + e] / most)) * w[e];
          CHECK(lhs <= con.period + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("planning is deterministic") {
  std::mt19937_64 rng(31);
  int seen = 0;
  while (seen < 20) {
    const auto tc = random_tiny_case(rng);
    if (!tc) continue;
    ++seen;
    const auto a = plan_instance(tc->instance, tiny_sq(), tc->scenario);
    const auto b = plan_instance(tc->instance, tiny_sq(), tc->scenario);
    CHECK(a.decision == b.decision);
    CHECK(a.value == b.value);
    CHECK(a.stats.nodes == b.stats.nodes);
    CHECK(a.stats.iterations == b.stats.iterations);
  }
}

TEST_CASE("bundled scenario plans close the gap") {
  const IcnnModel sq = load_model(std::string(WILDFIRE_DATA_DIR) + "/models/sq.icnn");
  const Scenario sc = load_scenario(std::string(WILDFIRE_DATA_DIR) + "/scenarios/s3_slope.json");
  const auto res = plan_period(sc.initial, sc, FleetState::fresh(sc.drones_count()), sq);
  CHECK_FALSE(res.stats.infeasible);
  CHECK_FALSE(res.stats.node_limit_hit);
  CHECK(res.stats.gap <= 1e-6);
  const Instance inst = extract_instance(sc.initial, sc, FleetState::fresh(sc.drones_count()));
  CHECK(check_deterministic(inst, res.decision, sc).empty());
  for (int l = 0; l < inst.drones; ++l) CHECK(cantelli_feasible(inst, res.decision, sc, l));
}

TEST_CASE("enumeration refuses large instances") {
  std::mt19937_64 rng(3);
  std::optional<wildfire::testing::TinyCase> tc;
  while (!tc) tc = random_tiny_case(rng);
  Instance big = tc->instance;
  big.bases = 17;
  big.drones = 1;
  CHECK_THROWS_AS(enumerate_exact(big, tiny_sq(), tc->scenario), std::invalid_argument);
}

TEST_CASE("stats rows line up with the header") {
  PlanStats s;
  s.iterations = 3;
  s.nodes = 12;
  s.cuts = 5;
  s.value = 2.5;
  s.wall_ms = 1.25;
  Instance inst = bare_instance(2);
  inst.drones = 4;
  const std::string row = stats_csv_row("p7", inst, s);
  CHECK(stats_csv_header() == "instance,fires,bases,drones,iterations,nodes,cuts,value,wall_ms");
  CHECK(row == "p7,0,2,4,3,12,5,2.5,1.25");
}
