// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "support.hpp"
#include "wildfire/bench.hpp"
#include "wildfire/icnn.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/rollout.hpp"
#include "wildfire/solver.hpp"

using namespace wildfire;
using namespace wildfire::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kQuadTol = 1e-9;         // criterion 1
constexpr double kExactTol = 1e-6;        // criterion 2
constexpr double kMinAccuracy = 0.90;     // criterion 3
constexpr double kMinSpecificity = 0.95;  // criterion 3
constexpr double kConvexTol = 1e-6;       // criterion 4
constexpr double kMinReduction = 15.0;    // criterion 5, percent
constexpr double kZetaTol = 0.0;          // criterion 7, exact

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// Worst-case Cantelli test computed straight from the instance data: the
// drone's time is sum_e w_e (D_e / alpha + tau_i(e)) with w = 2x - m.
bool cantelli_direct(const Instance& inst, const Scenario& sc, const std::vector<double>& x) {
  const int I = inst.fire_count(), J = inst.bases;
  int last = -1;
  for (int e = 0; e < I * J; ++e)
    if (x[e] > 0.5 && (last < 0 || inst.dist[e] > inst.dist[last])) last = e;
  double mean = 0.0, var = 0.0;
  for (int e = 0; e < I * J; ++e) {
    const double we = 2.0 * x[e] - (e == last ? 1.0 : 0.0);
    mean += we * (inst.dist[e] / sc.speed + inst.mu[e / J]);
    for (int f = 0; f < I * J; ++f) {
      const double wf = 2.0 * x[f] - (f == last ? 1.0 : 0.0);
      var += we * wf * inst.sigma[static_cast<std::size_t>(e / J) * I + f / J];
    }
  }
  const double k = (1.0 - sc.risk) / sc.risk;
  return mean + std::sqrt(k * std::max(0.0, var)) <= sc.period;
}

Outcome reformulation() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long vectors = 0, disagreements = 0, feasible = 0;
  for (int draw = 0; draw < 400; ++draw) {
    const int I = 1 + static_cast<int>(rng() % 3), J = 1 + static_cast<int>(rng() % 2);
    Scenario sc;
    sc.width = sc.height = 12;
    for (int j = 0; j < J; ++j) sc.bases.push_back({int(rng() % 12), int(rng() % 12)});
    sc.drones = {{0, 100.0}};
    sc.speed = 1.0 + 4.0 * u(rng);
    sc.period = 1.0 + 12.0 * u(rng);
    sc.risk = 0.02 + 0.45 * u(rng);
    sc.safe_distance = 0.0;
    FireMap m(12, 12);
    while (static_cast<int>(m.burning_count()) < I) m.ignite(rng() % 12, rng() % 12, 1.0);
    Instance inst = extract_instance(m, sc, FleetState::fresh(1));
    for (double& mu : inst.mu) mu = 2.0 * u(rng);
    inst.sigma = random_pd(rng, I);
    const CcroConstraint con = build_ccro_full(inst, sc);
    for (const auto& x : all_binary(con.size())) {
      const auto sel = argmax_selector(x, con.dist);
      double theta = 0.0;
      for (int e = 0; e < con.size(); ++e) theta = std::max(theta, x[e] * con.dist[e]);
      const bool rows = con.satisfied(x, sel, theta, kQuadTol);
      const bool oracle = cantelli_direct(inst, sc, x);
      ++vectors;
      feasible += oracle;
      disagreements += rows != oracle;
    }
  }
  return {vectors >= 500 && disagreements == 0 && feasible > 0 && feasible < vectors,
          fmt("%.0f vectors, %.0f feasible, %.0f disagreements", vectors, feasible, disagreements)};
}

Outcome exactness(const IcnnModel& sq) {
  std::mt19937_64 rng(202);
  int compared = 0, mismatches = 0, nonzero = 0;
  double worst = 0.0;
  while (compared < 240) {
    const auto tc = random_tiny_case(rng);
    if (!tc) continue;
    SolverOptions opt;
    opt.mode = compared % 2 ? PlanMode::Plain : PlanMode::Ccro;
    opt.require_coverage = compared % 4 >= 2;
    const auto exact = enumerate_exact(tc->instance, sq, tc->scenario, opt);
    const auto plan = plan_period(tc->map, tc->scenario, FleetState::fresh(tc->scenario.drones_count()), sq, opt);
    ++compared;
    if (plan.stats.infeasible != !exact.feasible) {
      ++mismatches;
      continue;
    }
    if (!exact.feasible) continue;
    const double diff = std::abs(plan.value - exact.value);
    worst = std::max(worst, diff);
    if (diff > kExactTol) ++mismatches;
    nonzero += plan.decision.assignments() > 0;
  }
  return {mismatches == 0 && nonzero > 0,
          fmt("%.0f instances, %.0f mismatches, max |diff| %.2e, %.0f with sorties", compared,
              mismatches, worst, nonzero)};
}

Outcome predictor(IcnnModel& fresh_sq) {
  // same recipe as the bundled checkpoints
  auto s_pairs = augment(generate_pairs(36, 20, 9, false, 1));
  auto sq_pairs = augment(generate_pairs(36, 20, 9, true, 1));
  TrainConfig cfg;
  const IcnnModel s = train_s(s_pairs, cfg, 1).model;
  fresh_sq = train_sq(sq_pairs, cfg, 1).model;
  const auto held_s = generate_pairs(20, 20, 9, false, derive_seed(4242, 1));
  const auto held_sq = generate_pairs(20, 20, 9, true, derive_seed(4242, 2));
  const auto rs = evaluate(s, held_s);
  const auto rq = evaluate(fresh_sq, held_sq);
  const bool ok = rs.accuracy >= kMinAccuracy && rs.specificity >= kMinSpecificity &&
                  rq.accuracy >= kMinAccuracy && rq.specificity >= kMinSpecificity;
  return {ok, fmt("S acc %.4f spec %.4f, SQ acc %.4f spec %.4f", rs.accuracy, rs.specificity,
                  rq.accuracy, rq.specificity)};
}

std::vector<double> random_quench(const FireMap& map, std::uint64_t seed, bool burning_only) {
  std::vector<double> q(map.cells(), 0.0);
  for (std::size_t c = 0; c < q.size(); ++c)
    if (!burning_only || map.burning(c)) q[c] = uniform01(seed, c);
  return q;
}

Outcome convexity(const std::vector<const IcnnModel*>& models) {
  double worst_mid = 0.0, worst_cut = 0.0;
  int probes = 0;
  for (const IcnnModel* m : models) {
    for (int k = 0; k < 1000; ++k) {
      const Episode ep = simulate_episode(m->width, 3, false, 31000 + k % 64);
      const FireMap& map = ep.maps.back();
      std::vector<double> state(map.cells());
      for (std::size_t c = 0; c < state.size(); ++c) state[c] = map.burning(c) ? 1.0 : 0.0;
      const auto a = random_quench(map, 3 * k, k % 2 == 0);
      const auto b = random_quench(map, 3 * k + 1, k % 2 == 0);
      std::vector<double> mid(a.size());
      for (std::size_t c = 0; c < a.size(); ++c) mid[c] = 0.5 * (a[c] + b[c]);
      worst_mid = std::max(worst_mid, predict_cost(*m, state, mid) -
                                          0.5 * (predict_cost(*m, state, a) + predict_cost(*m, state, b)));
      const CostCut at_a = cost_subgradient(*m, state, a);
      double lin = at_a.value;
      for (std::size_t c = 0; c < a.size(); ++c) lin += at_a.gradient[c] * (b[c] - a[c]);
      worst_cut = std::max(worst_cut, lin - predict_cost(*m, state, b));
      ++probes;
    }
  }
  return {worst_mid <= kConvexTol && worst_cut <= kConvexTol,
          fmt("%.0f midpoint + %.0f cut probes, worst excess %.2e / %.2e", probes, probes, worst_mid,
              worst_cut)};
}

struct BenchRun {
  BenchReport report;
  std::string csv;
  double seconds = 0.0;
};

BenchRun bench_once(const std::string& out_dir) {
  auto cfg = load_bench_config(std::string(WILDFIRE_DATA_DIR) + "/bench.json");
  cfg.output_dir = out_dir;
  const auto t0 = std::chrono::steady_clock::now();
  BenchRun r;
  r.report = run_bench(cfg);
  r.seconds = seconds_since(t0);
  std::ifstream f(fs::path(out_dir) / "report.csv", std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  r.csv = ss.str();
  return r;
}

Outcome table_trend(const BenchRun& run) {
  std::map<std::string, std::map<PlannerKind, double>> burn;
  std::map<std::string, std::map<PlannerKind, int>> count;
  for (const auto& row : run.report.rows) {
    burn[row.environment][row.planner] += row.burn_cost;
    ++count[row.environment][row.planner];
  }
  bool ok = run.report.reductions.size() == 4 && run.seconds < 600.0;
  std::string detail;
  for (const auto& red : run.report.reductions) {
    const double bc = burn[red.environment][PlannerKind::MipCcro] / count[red.environment][PlannerKind::MipCcro];
    const double bp = burn[red.environment][PlannerKind::MipPlain] / count[red.environment][PlannerKind::MipPlain];
    ok = ok && red.moves_ccro <= red.moves_plain && bc == bp;
    detail += red.environment + fmt(" %.1f%% (burn %.0f/%.0f); ", red.percent, bc, bp);
  }
  ok = ok && run.report.mean_reduction >= kMinReduction;
  return {ok, detail + fmt("mean %.2f%%, %.1f s", run.report.mean_reduction, run.seconds)};
}

Outcome ga_trend(const BenchRun& run) {
  std::map<std::pair<std::string, std::uint64_t>, std::map<PlannerKind, double>> burn;
  int uncontained = 0;
  for (const auto& row : run.report.rows) {
    burn[{row.environment, row.seed}][row.planner] = row.burn_cost;
    if (row.planner == PlannerKind::Ga && row.status == Termination::Uncontained) ++uncontained;
  }
  bool ok = true;
  int compared = 0;
  for (auto& [key, by] : burn) {
    if (!by.count(PlannerKind::Ga) || !by.count(PlannerKind::MipCcro)) continue;
    ++compared;
    ok = ok && by[PlannerKind::MipCcro] <= by[PlannerKind::Ga];
  }
  return {ok && compared > 0 && uncontained >= 1,
          fmt("%.0f (scenario, seed) pairs compared, GA uncontained in %.0f episodes", compared,
              uncontained)};
}

Outcome fleet_invariants(const IcnnModel& sq) {
  std::mt19937_64 rng(707);
  int episodes = 0, transitions = 0, failures = 0;
  while (episodes < 100) {
    const auto tc = random_tiny_case(rng);
    if (!tc) continue;
    Scenario sc = tc->scenario;
    sc.weather.wind_speed = 0.4;
    RolloutOptions opt;
    opt.horizon = 4;
    opt.ga.population = 16;
    opt.ga.generations = 20;
    const PlannerKind planner = static_cast<PlannerKind>(episodes % 3);
    const auto trace = run_episode(tc->map, sc, planner, sq, derive_seed(7, episodes), opt);
    ++episodes;
    for (const auto& p : trace.periods) {
      const Instance inst = extract_instance(p.map, sc, p.fleet_before);
      for (int l = 0; l < inst.drones; ++l) {
        ++transitions;
        double work = 0.0;
        for (int i = 0; i < p.decision.fires; ++i)
          for (int j = 0; j < p.decision.bases; ++j)
            if (p.decision.at(i, j, l)) work += 2.0 * inst.d(i, j) / sc.speed + p.tau[i];
        const double u = p.fleet_after.battery[l];
        const bool floor = u > sc.reserve || u == 1.0;
        const bool swap_flag = (u == 1.0) || p.fleet_after.swapped[l] == 0;
        const double zeta = std::max(0.0, p.fleet_before.overtime[l] + work - sc.period);
        const bool overtime = std::abs(p.fleet_after.overtime[l] - zeta) <= kZetaTol;
        const bool avail = p.fleet_after.available[l] == (p.fleet_after.overtime[l] > 0.0 ? 0 : 1);
        if (!(floor && swap_flag && overtime && avail)) ++failures;
      }
    }
  }
  return {failures == 0 && transitions > 0,
          fmt("%.0f episodes, %.0f transitions, %.0f violations", episodes, transitions, failures)};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const Outcome& o, double secs) {
    std::printf("[%s] %d %-28s %7.1f s  %s\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  };
  auto timed = [&](int id, const char* name, double limit, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = f();
    const double secs = seconds_since(t0);
    if (limit > 0.0 && secs >= limit) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s limit)", limit);
    }
    report(id, name, o, secs);
  };

  const IcnnModel tiny = tiny_sq_model();
  const IcnnModel bundled = load_model(std::string(WILDFIRE_DATA_DIR) + "/models/sq.icnn");
  IcnnModel fresh;

  timed(1, "CCRO reformulation", 5.0, reformulation);
  timed(2, "solver exactness", 120.0, [&] { return exactness(tiny); });
  timed(3, "predictor quality", 600.0, [&] { return predictor(fresh); });
  timed(4, "cost head convexity", 0.0, [&] { return convexity({&bundled, &fresh}); });

  const fs::path tmp = fs::temp_directory_path() / ("wildfire_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  const auto t0 = std::chrono::steady_clock::now();
  const BenchRun first = bench_once((tmp / "a").string());
  const double bench_secs = seconds_since(t0);
  report(5, "CCRO moves below plain", table_trend(first), bench_secs);
  report(6, "GA burns at least as much", ga_trend(first), 0.0);
  timed(7, "fleet state invariants", 0.0, [&] { return fleet_invariants(tiny); });
  timed(8, "bench determinism", 0.0, [&] {
    const BenchRun second = bench_once((tmp / "b").string());
    return Outcome{!first.csv.empty() && second.csv == first.csv,
                   fmt("report.csv %.0f bytes, identical: %.0f", first.csv.size(), second.csv == first.csv)};
  });
  fs::remove_all(tmp);

  std::printf("%d of 8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
