#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "wildfire/bench.hpp"
#include "wildfire/render.hpp"
#include "wildfire/rng.hpp"
#include "wildfire/scenario_io.hpp"
#include "wildfire/solver.hpp"

using namespace wildfire;

namespace {

struct Options {
  std::uint64_t seed = 1;

  // gen-data
  int size = 20;
  int envs = 36;
  int horizon = 9;
  bool quench = true;
  bool augment = false;
  std::string out;

  // train
  std::string data;
  std::string kind = "sq";
  int epochs = 20;
  double learning_rate = 1.0;
  int hidden = 0;
  int batch = 32;

  // eval-predictor / plan / rollout
  std::string model;
  std::string s_model;
  std::string scenario;
  std::string mode = "ccro";
  bool coverage = false;
  std::string planner = "mip_ccro";

  // bench / render
  std::string config;
  bool serial = false;
  bool seed_given = false;
  std::string trace;
};

void print_decision(const Instance& inst, const Decision& d) {
  for (int i = 0; i < d.fires; ++i)
    for (int j = 0; j < d.bases; ++j)
      for (int l = 0; l < d.drones; ++l)
        if (d.at(i, j, l))
          std::printf("  fire (%d,%d) <- drone %d from base %d  D=%.3f\n", inst.fires[i].x,
                      inst.fires[i].y, l, j, inst.d(i, j));
}

int gen_data(const Options& o) {
  auto pairs = generate_pairs(o.envs, o.size, o.horizon, o.quench, o.seed);
  if (o.augment) pairs = augment(pairs);
  save_pairs(o.out, pairs);
  std::printf("%zu pairs -> %s\n", pairs.size(), o.out.c_str());
  return 0;
}

int train(const Options& o) {
  const auto pairs = load_pairs(o.data);
  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.learning_rate;
  cfg.hidden = o.hidden;
  cfg.batch = o.batch;
  const bool sq = o.kind == "sq";
  const auto result = sq ? train_sq(pairs, cfg, o.seed) : train_s(pairs, cfg, o.seed);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    std::printf("epoch %2zu  loss %.6f\n", e + 1, result.epoch_loss[e]);
  save_model(o.out, result.model);
  return 0;
}

int eval_predictor(const Options& o) {
  const auto model = load_model(o.model);
  std::vector<TrainingPair> pairs;
  if (!o.data.empty())
    pairs = load_pairs(o.data);
  else
    pairs = generate_pairs(o.envs, model.width, o.horizon, model.has_decision,
                           derive_seed(o.seed, 0x7e57));
  const auto m = evaluate(model, pairs);
  std::printf("Sensitivity %.4f\nSpecificity %.4f\nPrecision %.4f\nAccuracy %.4f\n", m.sensitivity,
              m.specificity, m.precision, m.accuracy);
  return 0;
}

int plan(const Options& o) {
  const auto sc = load_scenario(o.scenario);
  const auto sq = load_model(o.model);
  SolverOptions opt;
  opt.mode = parse_plan_mode(o.mode);
  opt.require_coverage = o.coverage;
  const auto fleet = FleetState::fresh(sc.drones_count());
  const auto inst = extract_instance(sc.initial, sc, fleet);
  const auto r = plan_instance(inst, sq, sc, opt);
  if (r.stats.infeasible) {
    std::printf("infeasible\n");
    return 0;
  }
  std::printf("value %.6f  predicted C %.3f  moves %.3f  iterations %d  nodes %d  cuts %d\n",
              r.value, r.stats.predicted_cost, movement(inst, r.decision), r.stats.iterations,
              r.stats.nodes, r.stats.cuts);
  print_decision(inst, r.decision);
  return 0;
}

int rollout(const Options& o) {
  const auto sc = load_scenario(o.scenario);
  const auto sq = load_model(o.model);
  RolloutOptions ro;
  ro.horizon = o.horizon;
  IcnnModel s_model;
  if (!o.s_model.empty()) {
    s_model = load_model(o.s_model);
    ro.s_model = &s_model;
  }
  const auto trace = run_episode(sc.initial, sc, parse_planner(o.planner), sq, o.seed, ro);
  if (!o.out.empty()) save_trace(o.out, trace);
  for (const auto& p : trace.periods)
    std::printf("t=%d  C=%.0f  sorties=%d  moves=%.3f%s\n", p.t, p.burn_cost,
                p.decision.assignments(), p.moves, p.plan_infeasible ? "  (plan infeasible)" : "");
  std::printf("moves %.3f  rounds %d  burn cost %.0f  %s\n", trace.moves, trace.rounds,
              trace.burn_cost, to_string(trace.status));
  return 0;
}

int bench(const Options& o) {
  auto cfg = load_bench_config(o.config);
  if (o.seed_given) cfg.seeds = {o.seed};
  if (!o.out.empty()) cfg.output_dir = o.out;
  const auto r = run_bench(cfg, o.serial ? ExecPolicy::Serial : ExecPolicy::Parallel);
  write_summary_csv(std::cout, r);
  if (!r.reductions.empty()) std::printf("mean move reduction %.2f%%\n", r.mean_reduction);
  return 0;
}

int render_cmd(const Options& o) {
  const auto trace = load_trace(o.trace);
  const auto s = render(trace, o.out);
  std::printf("%d frames, %d sorties -> %s\n", s.frames, s.sorties, o.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wildfire drone dispatch: simulator, ICNN predictor, CCRO planner"};
  app.require_subcommand(1);
  Options o;
  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Random seed")->each([&](const std::string&) { o.seed_given = true; });
  };

  auto* gen = app.add_subcommand("gen-data", "Simulate fire episodes into training pairs");
  gen->add_option("--size", o.size, "Grid side")->check(CLI::PositiveNumber);
  gen->add_option("--envs", o.envs, "Number of environments")->check(CLI::PositiveNumber);
  gen->add_option("--horizon", o.horizon, "Steps per environment")->check(CLI::PositiveNumber);
  gen->add_flag("!--no-quench", o.quench, "Spread-only pairs");
  gen->add_flag("--augment", o.augment, "Apply symmetry and translation augmentation");
  gen->add_option("--out", o.out, "Output .jsonl")->required();
  add_seed(gen);

  auto* tr = app.add_subcommand("train", "Train a predictor");
  tr->add_option("--data", o.data, "Training pairs (.jsonl)")->required();
  tr->add_option("--model", o.kind, "s or sq")->check(CLI::IsMember({"s", "sq"}));
  tr->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  tr->add_option("--lr", o.learning_rate)->check(CLI::PositiveNumber);
  tr->add_option("--hidden", o.hidden, "Hidden width, 0 for the grid default");
  tr->add_option("--batch", o.batch)->check(CLI::PositiveNumber);
  tr->add_option("--out", o.out, "Checkpoint path")->required();
  add_seed(tr);

  auto* ev = app.add_subcommand("eval-predictor", "Classification metrics on held-out data");
  ev->add_option("--model", o.model, "Checkpoint")->required();
  ev->add_option("--data", o.data, "Pairs (.jsonl); generated from --seed when omitted");
  ev->add_option("--envs", o.envs)->check(CLI::PositiveNumber);
  ev->add_option("--horizon", o.horizon)->check(CLI::PositiveNumber);
  add_seed(ev);

  auto* pl = app.add_subcommand("plan", "Solve one period for a scenario's initial map");
  pl->add_option("--scenario", o.scenario)->required();
  pl->add_option("--model", o.model, "SQ checkpoint")->required();
  pl->add_option("--mode", o.mode, "ccro or plain")->check(CLI::IsMember({"ccro", "plain"}));
  pl->add_flag("--coverage", o.coverage, "Require every fire to be fully covered");
  add_seed(pl);

  auto* ro = app.add_subcommand("rollout", "Run one episode");
  ro->add_option("--scenario", o.scenario)->required();
  ro->add_option("--model", o.model, "SQ checkpoint")->required();
  ro->add_option("--s-model", o.s_model, "S checkpoint for the spread forecast field");
  ro->add_option("--planner", o.planner)->check(CLI::IsMember({"mip_ccro", "mip_plain", "ga"}));
  ro->add_option("--horizon", o.horizon)->check(CLI::PositiveNumber);
  ro->add_option("--out", o.out, "Trace (.jsonl)");
  add_seed(ro);

  auto* be = app.add_subcommand("bench", "Compare planners over scenario files");
  be->add_option("--config", o.config)->required();
  be->add_option("--out", o.out, "Override the output directory");
  be->add_flag("--serial", o.serial, "Run cells one at a time");
  add_seed(be);

  auto* re = app.add_subcommand("render", "PGM frames and sortie SVG from a trace");
  re->add_option("--trace", o.trace)->required();
  re->add_option("--out", o.out, "Output directory")->required();
  add_seed(re);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (argc > 1 && argv[1][0] != '-' && app.get_subcommands({}).size() > 0) {
      bool known = false;
      for (const auto* c : app.get_subcommands({})) known = known || c->get_name() == argv[1];
      if (!known) std::cerr << "unknown subcommand '" << argv[1] << "'\n";
    }
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) return gen_data(o);
    if (tr->parsed()) return train(o);
    if (ev->parsed()) return eval_predictor(o);
    if (pl->parsed()) return plan(o);
    if (ro->parsed()) return rollout(o);
    if (be->parsed()) return bench(o);
    if (re->parsed()) return render_cmd(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
