#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli/commands.hpp"

using namespace roboevolve::cli;

int main(int argc, char** argv) {
  CLI::App app{"roboevolve: co-evolving symbolic simulator and planner policies"};
  app.require_subcommand(1);

  InitOptions init;
  auto* c_init = app.add_subcommand("init", "Parse, vote and instantiate the task repository");
  c_init->add_option("--scenes", init.scenes, "Directory of scene/v1 JSON files")->required();
  c_init->add_option("--out", init.out, "Output repository directory")->required();
  c_init->add_option("--max-difficulty", init.max_difficulty, "Largest task difficulty (chain length)");
  c_init->add_option("--votes", init.votes, "Parses per scene for self-consistency voting");
  c_init->add_option("--drop-rate", init.drop_rate, "Per-entity drop probability of the mock parser");
  c_init->add_option("--hallucinate-rate", init.hallucinate_rate, "Per-object ghost probability of the mock parser");
  c_init->add_option("--seed", init.seed, "Master seed");
  c_init->add_option("--chain-budget", init.chain_budget, "Max chains per scene and bin");

  RunOptions run;
  std::string run_config, run_mode;
  std::uint64_t run_seed = 0;
  int run_phases = 0;
  bool no_experiences = false;
  auto* c_run = app.add_subcommand("run", "Run the day/night evolution loop");
  auto* o_cfg = c_run->add_option("--config", run_config, "JSON config file");
  c_run->add_option("--repo", run.repo, "Task repository directory written by init");
  c_run->add_option("--out", run.out, "Run output directory");
  auto* o_mode = c_run->add_option("--mode", run_mode, "full | daytime-only | nighttime-only | sequential");
  auto* o_seed = c_run->add_option("--seed", run_seed, "Master seed (ROBOEVOLVE_SEED overrides)");
  auto* o_phases = c_run->add_option("--phases", run_phases, "Number of day/night cycles");
  c_run->add_flag("--no-experiences", no_experiences, "Skip the experience and pair JSONL stores");

  EvalOptions ev;
  std::string eval_repo, eval_levels = "1,2,3";
  std::uint64_t eval_seed = 0;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out suites");
  c_eval->add_option("--run", ev.run, "Run directory");
  auto* o_erepo = c_eval->add_option("--repo", eval_repo, "Task repository (defaults to the run's)");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint tag, or builtin:uniform / builtin:oracle");
  c_eval->add_option("--levels", eval_levels, "Comma-separated difficulty levels");
  c_eval->add_option("--episodes", ev.episodes, "Episodes per level");
  auto* o_eseed = c_eval->add_option("--seed", eval_seed, "Seed for the held-out split and rollouts");

  ReportOptions rep;
  auto* c_rep = app.add_subcommand("report", "Summarize a run; --plots writes SVG charts");
  c_rep->add_option("--run", rep.run, "Run directory");
  c_rep->add_flag("--plots", rep.plots, "Write SVG plots");

  GradientOptions grad;
  auto* c_grad = app.add_subcommand("check-gradients", "Compare analytic gradients with central differences");
  c_grad->add_option("--points", grad.points, "Random parameter points");
  c_grad->add_option("--step", grad.h, "Finite-difference step");
  c_grad->add_option("--tolerance", grad.tolerance, "Max allowed relative error");
  c_grad->add_option("--seed", grad.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*c_init) return cmd_init(init, std::cout, std::cerr);
  if (*c_run) {
    if (*o_cfg) run.config = run_config;
    if (*o_mode) run.mode = run_mode;
    if (*o_seed) run.seed = run_seed;
    if (*o_phases) run.phases = run_phases;
    run.write_experiences = !no_experiences;
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*c_eval) {
    if (*o_erepo) ev.repo = eval_repo;
    if (*o_eseed) ev.seed = eval_seed;
    ev.levels.clear();
    std::stringstream ss(eval_levels);
    std::string tok;
    try {
      while (std::getline(ss, tok, ',')) ev.levels.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      std::cerr << "error: --levels expects a comma-separated list of integers\n";
      return kExitUsage;
    }
    if (ev.levels.empty()) {
      std::cerr << "error: --levels is empty\n";
      return kExitUsage;
    }
    return cmd_eval(ev, std::cout, std::cerr);
  }
  if (*c_rep) return cmd_report(rep, std::cout, std::cerr);
  if (*c_grad) return cmd_check_gradients(grad, std::cout, std::cerr);
  return kExitUsage;
}
