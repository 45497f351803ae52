#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "wildfire/bench.hpp"
#include "wildfire/render.hpp"
#include "wildfire/scenario_io.hpp"

using namespace wildfire;
namespace fs = std::filesystem;

namespace {

const IcnnModel& tiny_sq() {
  static const IcnnModel m = wildfire::testing::tiny_sq_model();
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("wildfire_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Scenario tiny_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (;;) {
    auto tc = wildfire::testing::random_tiny_case(rng);
    if (!tc) continue;
    tc->scenario.initial = tc->map;
    tc->scenario.name = "tiny";
    return tc->scenario;
  }
}

// Scenario file, model and config for a small bench in `dir`.
void write_bench_inputs(const fs::path& dir, const std::string& planners, const std::string& seeds) {
  std::ofstream(dir / "tiny.json") << dump_scenario(tiny_scenario(3));
  save_model((dir / "sq.icnn").string(), tiny_sq());
  std::ofstream(dir / "bench.json")
      << R"({"scenarios": ["tiny.json"], "grid": 8, "horizon": 3, "planners": )" << planners
      << R"(, "seeds": )" << seeds << R"(, "output": "out", "models": {"sq": "sq.icnn"}})";
}

int run(const std::string& args, std::string* out = nullptr) {
  const std::string log = (fs::temp_directory_path() / ("wildfire_cli_" + std::to_string(::getpid()) + ".log")).string();
  const int status = std::system((std::string(WILDFIRE_CLI) + " " + args + " > " + log + " 2>&1").c_str());
  if (out) *out = slurp(log);
  fs::remove(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

BenchRow row(const std::string& env, PlannerKind p, double moves) {
  BenchRow r;
  r.environment = env;
  r.planner = p;
  r.moves = moves;
  return r;
}

}  // namespace

TEST_CASE("pgm frames") {
  FireMap map(20, 20, true);
  map.ignite(3, 4, 3.0);
  map.ignite(5, 5, 1.5);
  std::ostringstream os;
  write_pgm(os, map);
  const std::string s = os.str();
  const std::string header = "P5 20 20 255\n";
  REQUIRE(s.size() == header.size() + 400);
  CHECK(s.substr(0, header.size()) == header);
  const auto px = [&](int x, int y) { return static_cast<unsigned char>(s[header.size() + y * 20 + x]); };
  CHECK(px(3, 4) == 255);
  CHECK(px(5, 5) > 0);
  CHECK(px(5, 5) < 255);
  CHECK(px(0, 0) == 0);
}

TEST_CASE("sortie drawings") {
  EpisodeTrace empty;
  empty.width = empty.height = 8;
  std::ostringstream a;
  write_sortie_svg(a, empty);
  CHECK(a.str().find("<svg") == 0);
  CHECK(a.str().find("sortie") == std::string::npos);

  const Scenario sc = tiny_scenario(5);
  RolloutOptions opt;
  opt.horizon = 3;
  const auto trace = run_episode(sc.initial, sc, PlannerKind::MipCcro, tiny_sq(), 2, opt);
  int sorties = 0;
  for (const auto& p : trace.periods) sorties += p.decision.assignments();
  std::ostringstream b;
  write_sortie_svg(b, trace);
  int lines = 0;
  for (std::size_t pos = 0; (pos = b.str().find("class=\"sortie\"", pos)) != std::string::npos; ++pos) ++lines;
  CHECK(lines == sorties);

  TempDir dir("render");
  const auto summary = render(trace, dir.path.string(), "ep");
  CHECK(summary.sorties == sorties);
  CHECK(summary.frames == static_cast<int>(trace.periods.size()));
  CHECK(fs::exists(dir.path / "paths" / "ep.svg"));
  CHECK(fs::exists(dir.path / "frames" / "ep_t00.pgm"));
}

TEST_CASE("reduction arithmetic") {
  CHECK(reduction_percent(100.0, 80.0) == doctest::Approx(20.0));
  CHECK(reduction_percent(0.0, 5.0) == 0.0);
  CHECK(reduction_percent(50.0, 60.0) == doctest::Approx(-20.0));

  const auto r = aggregate({row("a", PlannerKind::MipPlain, 10.0), row("a", PlannerKind::MipPlain, 30.0),
                            row("a", PlannerKind::MipCcro, 15.0), row("b", PlannerKind::MipPlain, 8.0),
                            row("b", PlannerKind::MipCcro, 8.0), row("b", PlannerKind::Ga, 99.0)});
  REQUIRE(r.reductions.size() == 2);
  CHECK(r.reductions[0].moves_plain == doctest::Approx(20.0));
  CHECK(r.reductions[0].percent == doctest::Approx(25.0));
  CHECK(r.reductions[1].percent == 0.0);
  CHECK(r.mean_reduction == doctest::Approx(12.5));
  REQUIRE(r.planners.size() == 3);
  CHECK(r.planners[0].episodes == 3);
  CHECK(r.planners[0].mean_moves == doctest::Approx(16.0));
  CHECK(r.planners[2].mean_moves == doctest::Approx(99.0));

  CHECK(aggregate({row("a", PlannerKind::Ga, 1.0)}).reductions.empty());
}

TEST_CASE("bench config parsing") {
  const auto c = parse_bench_config(
      R"({"scenarios": ["x.json"], "planners": ["ga"], "seeds": [4], "models": {"sq": "m/sq.icnn"}})", "/base");
  CHECK(c.scenarios == std::vector<std::string>{"/base/x.json"});
  CHECK(c.sq_model == "/base/m/sq.icnn");
  CHECK(c.grid == 20);
  CHECK_FALSE(c.training.enabled);
  CHECK_THROWS(parse_bench_config(R"({"scenarios": [], "planners": ["ga"], "seeds": [1]})"));
  CHECK_THROWS(parse_bench_config(R"({"scenarios": ["x"], "planners": ["milp"], "seeds": [1]})"));
  CHECK_THROWS(load_bench_config("/nonexistent/bench.json"));
}

TEST_CASE("a one-cell bench") {
  TempDir dir("bench1");
  write_bench_inputs(dir.path, R"(["mip_ccro"])", "[1]");
  const auto cfg = load_bench_config((dir.path / "bench.json").string());
  const auto r = run_bench(cfg, ExecPolicy::Serial);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].environment == "tiny");
  CHECK(r.reductions.empty());
  for (const char* f : {"report.csv", "summary.csv", "reduction.csv", "timing.csv"})
    CHECK(fs::exists(dir.path / "out" / f));
  CHECK(fs::exists(dir.path / "out" / "traces" / "tiny_mip_ccro_1.jsonl"));
}

TEST_CASE("bench output does not depend on the schedule") {
  TempDir dir("bench2");
  write_bench_inputs(dir.path, R"(["mip_ccro", "mip_plain", "ga"])", "[1, 2]");
  auto cfg = load_bench_config((dir.path / "bench.json").string());
  const auto a = run_bench(cfg, ExecPolicy::Parallel);
  const std::string first = slurp(dir.path / "out" / "report.csv");
  const auto b = run_bench(cfg, ExecPolicy::Serial);
  CHECK(slurp(dir.path / "out" / "report.csv") == first);
  CHECK(a.rows.size() == 6);
  REQUIRE(b.reductions.size() == 1);
  CHECK(b.mean_reduction == doctest::Approx(b.reductions[0].percent));
  std::ostringstream os;
  write_report_csv(os, a);
  CHECK(os.str() == first);
  CHECK(first.substr(0, first.find('\n')) ==
        "environment,planner,seed,moves,rounds,burn_cost,status,final_burning");
}

TEST_CASE("command line exit codes") {
  std::string out;
  CHECK(run("frobnicate", &out) == 1);
  CHECK(out.find("frobnicate") != std::string::npos);
  CHECK(run("bench --config missing.json", &out) == 2);
  CHECK(out.find("missing.json") != std::string::npos);
  CHECK(run("", &out) == 1);
}

TEST_CASE("command line data generation and evaluation") {
  TempDir dir("cli");
  const std::string a = (dir.path / "a.jsonl").string(), b = (dir.path / "b.jsonl").string();
  REQUIRE(run("gen-data --size 8 --envs 3 --horizon 3 --seed 5 --out " + a) == 0);
  REQUIRE(run("gen-data --size 8 --envs 3 --horizon 3 --seed 5 --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK_FALSE(slurp(a).empty());

  const std::string model = (dir.path / "sq.icnn").string();
  save_model(model, tiny_sq());
  std::string out;
  REQUIRE(run("eval-predictor --model " + model + " --envs 2 --horizon 3", &out) == 0);
  for (const char* name : {"Sensitivity", "Specificity", "Precision", "Accuracy"})
    CHECK(out.find(name) != std::string::npos);
}

TEST_CASE("scenario files round trip with their map") {
  const Scenario sc = tiny_scenario(9);
  const Scenario back = parse_scenario(dump_scenario(sc));
  CHECK(back.initial.intensity == sc.initial.intensity);
  CHECK(back.initial.fuel == sc.initial.fuel);
  CHECK(back.bases == sc.bases);
  CHECK(back.drones.size() == sc.drones.size());
  CHECK(dump_scenario(back) == dump_scenario(sc));
  const Scenario bundled = load_scenario(std::string(WILDFIRE_DATA_DIR) + "/scenarios/s1_ridge.json");
  CHECK(parse_scenario(dump_scenario(bundled)).initial.intensity == bundled.initial.intensity);
}
