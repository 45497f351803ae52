#include "wildfire/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "wildfire/render.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/scenario_io.hpp"

namespace wildfire {

namespace fs = std::filesystem;
using nlohmann::json;

void BenchConfig::validate() const {
  if (scenarios.empty()) throw std::invalid_argument("bench config lists no scenarios");
  if (planners.empty()) throw std::invalid_argument("bench config lists no planners");
  if (seeds.empty()) throw std::invalid_argument("bench config lists no seeds");
  if (horizon < 1) throw std::invalid_argument("bench horizon must be at least 1");
  if (grid < 1) throw std::invalid_argument("bench grid size must be positive");
  if (environments < 0) throw std::invalid_argument("environment count must be nonnegative");
  if (sq_model.empty()) throw std::invalid_argument("bench config needs an sq_model path");
}

BenchConfig parse_bench_config(const std::string& text, const std::string& base_dir) {
  const json j = json::parse(text);
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  };
  BenchConfig c;
  for (const auto& s : j.at("scenarios")) c.scenarios.push_back(resolve(s.get<std::string>()));
  c.grid = j.value("grid", c.grid);
  c.environments = j.value("environments", c.environments);
  c.horizon = j.value("horizon", c.horizon);
  for (const auto& p : j.at("planners")) c.planners.push_back(parse_planner(p.get<std::string>()));
  for (const auto& s : j.at("seeds")) c.seeds.push_back(s.get<std::uint64_t>());
  c.output_dir = resolve(j.value("output", c.output_dir));
  if (j.contains("models")) {
    c.s_model = resolve(j["models"].value("s", ""));
    c.sq_model = resolve(j["models"].value("sq", ""));
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    c.training.enabled = t.value("enabled", true);
    c.training.environments = t.value("environments", c.training.environments);
    c.training.horizon = t.value("horizon", c.training.horizon);
    c.training.augment = t.value("augment", c.training.augment);
    c.training.epochs = t.value("epochs", c.training.epochs);
    c.training.learning_rate = t.value("learning_rate", c.training.learning_rate);
    c.training.seed = t.value("seed", c.training.seed);
  }
  c.render = j.value("render", false);
  c.validate();
  return c;
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open bench config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_bench_config(ss.str(), fs::path(path).parent_path().string());
  } catch (const std::exception& e) {
    throw std::runtime_error("bench config '" + path + "': " + e.what());
  }
}

double reduction_percent(double moves_plain, double moves_ccro) {
  return moves_plain > 0.0 ? 100.0 * (moves_plain - moves_ccro) / moves_plain : 0.0;
}

BenchReport aggregate(std::vector<BenchRow> rows) {
  BenchReport r;
  r.rows = std::move(rows);
  std::vector<PlannerKind> order;
  for (const auto& row : r.rows)
    if (std::find(order.begin(), order.end(), row.planner) == order.end()) order.push_back(row.planner);
  for (auto p : order) {
    PlannerSummary s;
    s.planner = p;
    for (const auto& row : r.rows) {
      if (row.planner != p) continue;
      ++s.episodes;
      s.mean_moves += row.moves;
      s.mean_rounds += row.rounds;
      s.mean_burn_cost += row.burn_cost;
      if (row.status == Termination::Uncontained) ++s.uncontained;
    }
    s.mean_moves /= s.episodes;
    s.mean_rounds /= s.episodes;
    s.mean_burn_cost /= s.episodes;
    r.planners.push_back(s);
  }

  std::vector<std::string> envs;
  for (const auto& row : r.rows)
    if (std::find(envs.begin(), envs.end(), row.environment) == envs.end()) envs.push_back(row.environment);
  for (const auto& env : envs) {
    double plain = 0.0, ccro = 0.0;
    int np = 0, nc = 0;
    for (const auto& row : r.rows) {
      if (row.environment != env) continue;
      if (row.planner == PlannerKind::MipPlain) {
        plain += row.moves;
        ++np;
      } else if (row.planner == PlannerKind::MipCcro) {
        ccro += row.moves;
        ++nc;
      }
    }
    if (np == 0 || nc == 0) continue;
    Reduction red{env, plain / np, ccro / nc, 0.0};
    red.percent = reduction_percent(red.moves_plain, red.moves_ccro);
    r.reductions.push_back(red);
  }
  for (const auto& red : r.reductions) r.mean_reduction += red.percent;
  if (!r.reductions.empty()) r.mean_reduction /= r.reductions.size();
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string trace_name(const BenchRow& row) {
  return row.environment + "_" + to_string(row.planner) + "_" + std::to_string(row.seed);
}

IcnnModel obtain_model(const std::string& path, bool with_quench, const BenchConfig& cfg) {
  if (fs::exists(path)) return load_model(path);
  if (!cfg.training.enabled) throw std::runtime_error("missing model file '" + path + "'");
  const auto& t = cfg.training;
  auto pairs = generate_pairs(t.environments, cfg.grid, t.horizon, with_quench,
                              derive_seed(t.seed, with_quench ? 2 : 1));
  if (t.augment) pairs = augment(pairs);
  TrainConfig tc;
  tc.epochs = t.epochs;
  tc.learning_rate = t.learning_rate;
  auto model = with_quench ? train_sq(pairs, tc, t.seed).model : train_s(pairs, tc, t.seed).model;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  save_model(path, model);
  return model;
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg, ExecPolicy policy) {
  cfg.validate();
  std::vector<Scenario> scenarios;
  const std::size_t limit = cfg.environments > 0
                                ? std::min<std::size_t>(cfg.environments, cfg.scenarios.size())
                                : cfg.scenarios.size();
  for (std::size_t k = 0; k < limit; ++k) {
    auto s = load_scenario(cfg.scenarios[k]);
    if (s.name.empty()) s.name = fs::path(cfg.scenarios[k]).stem().string();
    if (s.width != cfg.grid || s.height != cfg.grid)
      throw std::runtime_error("scenario '" + s.name + "' does not match the configured grid size");
    if (s.initial.intensity.empty()) throw std::runtime_error("scenario '" + s.name + "' has no map");
    scenarios.push_back(std::move(s));
  }

  const IcnnModel sq = obtain_model(cfg.sq_model, true, cfg);
  IcnnModel s_model;
  const bool have_s = !cfg.s_model.empty();
  if (have_s) s_model = obtain_model(cfg.s_model, false, cfg);

  const fs::path out(cfg.output_dir);
  fs::create_directories(out / "traces");

  struct Cell {
    std::size_t env;
    PlannerKind planner;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t e = 0; e < scenarios.size(); ++e)
    for (auto p : cfg.planners)
      for (auto seed : cfg.seeds) cells.push_back({e, p, seed});

  std::vector<BenchRow> rows(cells.size());
  std::vector<std::string> errors(cells.size());
  const int n = static_cast<int>(cells.size());
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::Parallel)
  for (int k = 0; k < n; ++k) {
    const auto& c = cells[k];
    const Scenario& sc = scenarios[c.env];
    try {
      const auto t0 = std::chrono::steady_clock::now();
      RolloutOptions ro;
      ro.horizon = cfg.horizon;
      ro.s_model = have_s ? &s_model : nullptr;
      const auto trace = run_episode(sc.initial, sc, c.planner, sq, c.seed, ro);
      BenchRow row;
      row.environment = sc.name;
      row.planner = c.planner;
      row.seed = c.seed;
      row.moves = trace.moves;
      row.rounds = trace.rounds;
      row.burn_cost = trace.burn_cost;
      row.status = trace.status;
      row.final_burning = static_cast<int>(trace.final_map.burning_count());
      const auto name = trace_name(row);
      save_trace((out / "traces" / (name + ".jsonl")).string(), trace);
      if (cfg.render) render(trace, out.string(), name);
      row.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      rows[k] = row;
    } catch (const std::exception& e) {
      errors[k] = sc.name + "/" + to_string(c.planner) + "/" + std::to_string(c.seed) + ": " + e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  auto report = aggregate(std::move(rows));
  auto write = [&](const char* name, void (*fn)(std::ostream&, const BenchReport&)) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + (out / name).string() + "'");
    fn(f, report);
  };
  write("report.csv", write_report_csv);
  write("summary.csv", write_summary_csv);
  write("reduction.csv", write_reduction_csv);
  write("timing.csv", write_timing_csv);
  return report;
}

void write_report_csv(std::ostream& os, const BenchReport& r) {
  os << "environment,planner,seed,moves,rounds,burn_cost,status,final_burning\n";
  for (const auto& row : r.rows)
    os << row.environment << ',' << to_string(row.planner) << ',' << row.seed << ','
       << fmt(row.moves) << ',' << row.rounds << ',' << fmt(row.burn_cost) << ','
       << to_string(row.status) << ',' << row.final_burning << '\n';
}

void write_summary_csv(std::ostream& os, const BenchReport& r) {
  os << "planner,episodes,mean_moves,mean_rounds,mean_burn_cost,uncontained\n";
  for (const auto& s : r.planners)
    os << to_string(s.planner) << ',' << s.episodes << ',' << fmt(s.mean_moves) << ','
       << fmt(s.mean_rounds) << ',' << fmt(s.mean_burn_cost) << ',' << s.uncontained << '\n';
}

void write_reduction_csv(std::ostream& os, const BenchReport& r) {
  os << "environment,moves_plain,moves_ccro,reduction_pct\n";
  for (const auto& red : r.reductions)
    os << red.environment << ',' << fmt(red.moves_plain) << ',' << fmt(red.moves_ccro) << ','
       << fmt(red.percent) << '\n';
  if (!r.reductions.empty()) os << "mean,,," << fmt(r.mean_reduction) << '\n';
}

void write_timing_csv(std::ostream& os, const BenchReport& r) {
  os << "environment,planner,seed,wall_ms\n";
  for (const auto& row : r.rows)
    os << row.environment << ',' << to_string(row.planner) << ',' << row.seed << ','
       << fmt(row.wall_ms) << '\n';
}

}  // namespace wildfire
