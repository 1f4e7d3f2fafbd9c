#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "roboevolve/scene.hpp"
#include "roboevolve/scenegraph.hpp"

namespace roboevolve::cli {

// Stable exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Scenes and task repository as written by init.
struct Workspace {
  std::vector<Scene> scenes;
  TaskRepository repo;
};

Workspace load_repository(const std::filesystem::path& dir);

struct InitOptions {
  std::filesystem::path scenes;
  std::filesystem::path out;
  int max_difficulty = 3;
  int votes = 8;
  double drop_rate = 0.2;
  double hallucinate_rate = 0.05;
  std::uint64_t seed = 0;
  std::size_t chain_budget = 4096;
};

struct RunOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path repo = "repo";
  std::filesystem::path out = "run";
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> phases;
  bool write_experiences = true;
};

struct EvalOptions {
  std::filesystem::path run = "run";
  std::optional<std::filesystem::path> repo;  // defaults to the run's repository
  std::string checkpoint = "final";
  std::vector<int> levels = {1, 2, 3};
  int episodes = 200;
  std::optional<std::uint64_t> seed;
};

struct ReportOptions {
  std::filesystem::path run = "run";
  bool plots = false;
};

struct GradientOptions {
  int points = 100;
  double h = 1e-5;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

struct GradientReport {
  double grpo_simulator = 0.0;
  double grpo_planner = 0.0;
  double dpo_simulator = 0.0;
  double dpo_planner = 0.0;
  double worst() const;
};

// Finite-difference audit of both objectives for both policies at random points.
GradientReport check_gradients(const GradientOptions& opt);

int cmd_init(const InitOptions& opt, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);
int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err);
int cmd_check_gradients(const GradientOptions& opt, std::ostream& out, std::ostream& err);

// ROBOEVOLVE_SEED, when set, wins over the --seed flag.
std::optional<std::uint64_t> seed_from_env();

}  // namespace roboevolve::cli
