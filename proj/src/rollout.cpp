#include "wildfire/rollout.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "wildfire/rng.hpp"

namespace wildfire {

using nlohmann::json;

PlannerKind parse_planner(const std::string& s) {
  if (s == "mip_ccro") return PlannerKind::MipCcro;
  if (s == "mip_plain") return PlannerKind::MipPlain;
  if (s == "ga") return PlannerKind::Ga;
  throw std::invalid_argument("unknown planner '" + s + "' (expected mip_ccro, mip_plain or ga)");
}

const char* to_string(PlannerKind p) {
  switch (p) {
    case PlannerKind::MipCcro: return "mip_ccro";
    case PlannerKind::MipPlain: return "mip_plain";
    case PlannerKind::Ga: return "ga";
  }
  return "?";
}

const char* to_string(Termination t) {
  return t == Termination::Extinguished ? "extinguished" : "uncontained";
}

FleetState advance_fleet(const FleetState& fleet, const Decision& d, const Instance& inst,
                         std::span<const double> tau, const Scenario& scenario) {
  if (static_cast<int>(tau.size()) != inst.fire_count())
    throw std::invalid_argument("need one delivery time per fire point");
  if (fleet.size() != inst.drones) throw std::invalid_argument("fleet size mismatch");
  FleetState next = fleet;
  for (int l = 0; l < inst.drones; ++l) {
    double flown = 0.0, work = 0.0;
    for (int i = 0; i < d.fires; ++i)
      for (int j = 0; j < d.bases; ++j)
        if (d.at(i, j, l)) {
          flown += 2.0 * inst.d(i, j);
          work += 2.0 * inst.d(i, j) / scenario.speed + tau[i];
        }
    const double residual = fleet.battery[l] - flown / inst.range[l];
    if (residual < -1e-9)
      throw std::runtime_error("drone " + std::to_string(l) + " ran its battery below zero");
    const bool keep = residual > scenario.reserve;
    next.swapped[l] = keep ? 0 : 1;
    next.battery[l] = keep ? residual : 1.0;
    next.overtime[l] = std::max(0.0, fleet.overtime[l] + work - scenario.period);
    const double blocked = std::ceil(next.overtime[l] / scenario.big_m);
    next.available[l] = blocked > 0.0 ? 0 : 1;
  }
  return next;
}

bool terminal_check(const Instance& inst, const Decision& d) {
  for (int i = 0; i < inst.fire_count(); ++i)
    if (d.fire_load(i) != inst.fires[i].cap) return false;
  return true;
}

bool terminal_exact_equality(const Instance& inst, const Decision& d) {
  for (int i = 0; i < inst.fire_count(); ++i)
    if (static_cast<double>(d.fire_load(i)) != inst.fires[i].intensity) return false;
  return true;
}

std::vector<double> sample_delivery_times(const Instance& inst, std::uint64_t seed) {
  const int I = inst.fire_count();
  std::vector<double> tau(I);
  for (int i = 0; i < I; ++i) {
    const double mu = inst.mu[i];
    const double var = inst.sigma[static_cast<std::size_t>(i) * I + i];
    const double s2 = std::log1p(var / (mu * mu));
    const double m = std::log(mu) - 0.5 * s2;
    const double u1 = 1.0 - uniform01(seed, 2 * static_cast<std::uint64_t>(i));
    const double u2 = uniform01(seed, 2 * static_cast<std::uint64_t>(i) + 1);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    tau[i] = std::exp(m + std::sqrt(s2) * z);
  }
  return tau;
}

EpisodeTrace run_episode(const FireMap& initial, const Scenario& scenario, PlannerKind planner,
                         const IcnnModel& sq, std::uint64_t seed, const RolloutOptions& opt) {
  if (opt.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  EpisodeTrace trace;
  trace.scenario = scenario.name;
  trace.planner = planner;
  trace.seed = seed;
  trace.horizon = opt.horizon;
  trace.width = initial.width;
  trace.height = initial.height;
  trace.bases = scenario.bases;

  FireMap map = initial;
  FleetState fleet = FleetState::fresh(scenario.drones_count());
  for (int t = 0; t < opt.horizon; ++t) {
    const double cost = burn_cost(map);
    if (cost == 0.0) break;
    try {
      const Instance inst = extract_instance(map, scenario, fleet);
      PeriodRecord rec;
      rec.t = t;
      rec.map = map;
      rec.fires = inst.fires;
      rec.burn_cost = cost;
      rec.fleet_before = fleet;
      rec.coverage_required = t == opt.horizon - 1;

      if (planner == PlannerKind::Ga) {
        const auto res = ga_plan_instance(inst, sq, scenario, derive_seed(seed, 400, t), opt.ga);
        // an infeasible plan cannot be flown; the period is spent idle
        rec.plan_infeasible = !res.feasible;
        rec.decision = res.feasible ? res.decision : Decision::zeros(inst);
        rec.plan_value = res.value;
      } else {
        SolverOptions so = opt.solver;
        so.mode = planner == PlannerKind::MipCcro ? PlanMode::Ccro : PlanMode::Plain;
        so.require_coverage = rec.coverage_required;
        auto res = plan_instance(inst, sq, scenario, so);
        if (so.require_coverage && res.stats.infeasible) {
          so.require_coverage = false;
          res = plan_instance(inst, sq, scenario, so);
        }
        rec.plan_infeasible = res.stats.infeasible;
        rec.decision = res.decision;
        rec.plan_value = res.value;
        rec.stats = res.stats;
      }
      rec.predicted_cost = CostOracle(inst, sq).value(rec.decision);
      if (opt.s_model) rec.predicted_spread = predict_s(*opt.s_model, map).burning_count();
      rec.coverage_met = terminal_check(inst, rec.decision);
      rec.coverage_exact = terminal_exact_equality(inst, rec.decision);
      rec.moves = movement(inst, rec.decision);
      for (auto v : rec.decision.b) rec.active_bases += v;

      rec.tau = sample_delivery_times(inst, derive_seed(seed, 200, t));
      const FireMap quenched = apply_quench(map, quench_counts(inst, rec.decision));
      const FireMap next =
          step_spread(quenched, scenario.weather, derive_seed(seed, 300, t), scenario.spread);
      rec.fleet_after = advance_fleet(fleet, rec.decision, inst, rec.tau, scenario);
      rec.next_burn_cost = burn_cost(next);

      trace.moves += rec.moves;
      trace.burn_cost += rec.burn_cost;
      if (rec.decision.assignments() > 0) ++trace.rounds;
      fleet = rec.fleet_after;
      map = next;
      trace.periods.push_back(std::move(rec));
    } catch (const std::exception& e) {
      throw std::runtime_error("period " + std::to_string(t) + ": " + e.what());
    }
  }
  trace.final_map = map;
  trace.status = map.burning_count() > 0 ? Termination::Uncontained : Termination::Extinguished;
  return trace;
}

// --- trace files -------------------------------------------------------------

namespace {

json fleet_json(const FleetState& f) {
  return {{"battery", f.battery}, {"overtime", f.overtime}, {"swapped", f.swapped},
          {"available", f.available}};
}

FleetState fleet_from(const json& j) {
  FleetState f;
  f.battery = j.at("battery").get<std::vector<double>>();
  f.overtime = j.at("overtime").get<std::vector<double>>();
  f.swapped = j.at("swapped").get<std::vector<std::uint8_t>>();
  f.available = j.at("available").get<std::vector<std::uint8_t>>();
  return f;
}

}  // namespace

void write_trace_jsonl(std::ostream& os, const EpisodeTrace& trace) {
  for (const auto& p : trace.periods) {
    json j;
    j["t"] = p.t;
    j["burn_cost"] = p.burn_cost;
    j["next_burn_cost"] = p.next_burn_cost;
    j["predicted_cost"] = p.predicted_cost;
    j["predicted_spread"] = p.predicted_spread;
    j["moves"] = p.moves;
    j["active_bases"] = p.active_bases;
    j["assignments"] = p.decision.assignments();
    j["plan_value"] = p.plan_value;
    j["plan_infeasible"] = p.plan_infeasible;
    j["coverage_required"] = p.coverage_required;
    j["coverage_met"] = p.coverage_met;
    j["coverage_exact"] = p.coverage_exact;
    j["iterations"] = p.stats.iterations;
    j["nodes"] = p.stats.nodes;
    j["fires"] = json::array();
    for (const auto& f : p.fires) j["fires"].push_back({f.x, f.y, f.intensity});
    j["decision"] = {{"fires", p.decision.fires}, {"bases", p.decision.bases},
                     {"drones", p.decision.drones}, {"x", p.decision.x}, {"b", p.decision.b}};
    j["tau"] = p.tau;
    j["fleet_before"] = fleet_json(p.fleet_before);
    j["fleet_after"] = fleet_json(p.fleet_after);
    j["width"] = p.map.width;
    j["height"] = p.map.height;
    j["intensity"] = p.map.intensity;
    j["fuel"] = p.map.fuel;
    os << j.dump() << '\n';
  }
  json s;
  s["summary"] = true;
  s["scenario"] = trace.scenario;
  s["planner"] = to_string(trace.planner);
  s["seed"] = trace.seed;
  s["horizon"] = trace.horizon;
  s["width"] = trace.width;
  s["height"] = trace.height;
  s["bases"] = json::array();
  for (const auto& b : trace.bases) s["bases"].push_back({b.x, b.y});
  s["periods"] = trace.periods.size();
  s["moves"] = trace.moves;
  s["rounds"] = trace.rounds;
  s["burn_cost"] = trace.burn_cost;
  s["final_burning"] = trace.final_map.burning_count();
  s["status"] = to_string(trace.status);
  os << s.dump() << '\n';
}

void save_trace(const std::string& path, const EpisodeTrace& trace) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write trace '" + path + "'");
  write_trace_jsonl(f, trace);
}

EpisodeTrace read_trace_jsonl(std::istream& is) {
  EpisodeTrace trace;
  std::string line;
  bool summary = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.value("summary", false)) {
      summary = true;
      trace.scenario = j.value("scenario", "");
      trace.planner = parse_planner(j.at("planner").get<std::string>());
      trace.seed = j.value("seed", std::uint64_t{0});
      trace.horizon = j.value("horizon", 0);
      trace.width = j.at("width").get<int>();
      trace.height = j.at("height").get<int>();
      for (const auto& b : j.at("bases")) trace.bases.push_back({b[0].get<int>(), b[1].get<int>()});
      trace.moves = j.value("moves", 0.0);
      trace.rounds = j.value("rounds", 0);
      trace.burn_cost = j.value("burn_cost", 0.0);
      trace.status = j.value("status", std::string()) == "uncontained" ? Termination::Uncontained
                                                                        : Termination::Extinguished;
      continue;
    }
    PeriodRecord p;
    p.t = j.at("t").get<int>();
    p.burn_cost = j.value("burn_cost", 0.0);
    p.next_burn_cost = j.value("next_burn_cost", 0.0);
    p.predicted_cost = j.value("predicted_cost", 0.0);
    p.predicted_spread = j.value("predicted_spread", -1);
    p.moves = j.value("moves", 0.0);
    p.active_bases = j.value("active_bases", 0);
    p.plan_value = j.value("plan_value", 0.0);
    p.plan_infeasible = j.value("plan_infeasible", false);
    p.coverage_required = j.value("coverage_required", false);
    p.coverage_met = j.value("coverage_met", false);
    p.coverage_exact = j.value("coverage_exact", false);
    p.stats.iterations = j.value("iterations", 0);
    p.stats.nodes = j.value("nodes", 0);
    for (const auto& f : j.at("fires")) {
      FirePoint fp;
      fp.x = f[0].get<int>();
      fp.y = f[1].get<int>();
      fp.intensity = f[2].get<double>();
      fp.cap = static_cast<int>(std::ceil(fp.intensity - 1e-12));
      p.fires.push_back(fp);
    }
    const auto& d = j.at("decision");
    p.decision = Decision(d.at("fires").get<int>(), d.at("bases").get<int>(), d.at("drones").get<int>());
    p.decision.x = d.at("x").get<std::vector<std::uint8_t>>();
    p.decision.b = d.at("b").get<std::vector<std::uint8_t>>();
    if (p.decision.x.size() != static_cast<std::size_t>(p.decision.fires) * p.decision.bases * p.decision.drones)
      throw std::runtime_error("trace decision has the wrong size");
    p.tau = j.at("tau").get<std::vector<double>>();
    p.fleet_before = fleet_from(j.at("fleet_before"));
    p.fleet_after = fleet_from(j.at("fleet_after"));
    p.map = FireMap(j.at("width").get<int>(), j.at("height").get<int>(), false);
    p.map.intensity = j.at("intensity").get<std::vector<double>>();
    p.map.fuel = j.at("fuel").get<std::vector<std::uint8_t>>();
    const auto cells = static_cast<std::size_t>(p.map.width) * p.map.height;
    if (p.map.intensity.size() != cells || p.map.fuel.size() != cells)
      throw std::runtime_error("trace map has the wrong size");
    trace.periods.push_back(std::move(p));
  }
  if (!summary) throw std::runtime_error("trace has no summary record");
  return trace;
}

EpisodeTrace load_trace(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open trace '" + path + "'");
  return read_trace_jsonl(f);
}

}  // namespace wildfire
