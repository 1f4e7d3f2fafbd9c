#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "roboevolve/curriculum.hpp"
#include "roboevolve/mining.hpp"
#include "roboevolve/optim.hpp"
#include "roboevolve/planner.hpp"
#include "roboevolve/reward.hpp"
#include "roboevolve/scenegraph.hpp"
#include "roboevolve/world.hpp"

namespace roboevolve {

enum class LoopMode : std::uint8_t { Full, DaytimeOnly, NighttimeOnly, Sequential };

std::string_view to_string(LoopMode m);
std::optional<LoopMode> loop_mode_from_string(std::string_view s);  // accepts "daytime-only" etc.

struct LoopConfig {
  LoopMode mode = LoopMode::Full;
  std::uint64_t seed = 0;
  int phases = 3;
  int max_difficulty = 3;

  int sim_iterations = 300;
  int planner_iterations = 100;
  int interleave_chunks = 1;  // alternate simulator/planner stages this many times per day
  bool selective_simulation = true;

  double eta = 0.2;
  std::size_t candidate_budget = kDefaultCandidateBudget;
  int planner_group_size = 16;
  double planner_temperature = 1.0;

  OptimConfig sim_optim;
  OptimConfig planner_optim;
  int night_epochs = 8;
  double night_sim_lr = 10.0;
  double night_planner_lr = 0.05;

  RewardToggles reward;
  CurriculumConfig curriculum;
  int bootstrap_episodes = 16;
  int probe_episodes = 200;
  double saturation_threshold = 0.8;

  double holdout_fraction = 0.2;
  int eval_episodes = 200;

  void validate() const;  // throws Error(ConfigInvalid)
};

LoopConfig default_loop_config();
nlohmann::json loop_config_to_json(const LoopConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
LoopConfig loop_config_from_json(const nlohmann::json& j);

struct MetricsRow {
  std::string phase;
  int iteration = 0;
  int bin = 0;
  std::optional<double> objective;
  std::optional<double> dpo_loss;
  std::optional<double> reward_mean;
  std::optional<double> success_rate;
  std::optional<double> i_sem_mean;
  std::optional<double> s_f_rate;
  std::optional<double> seg_mean;
  std::optional<double> s_e_rate;
};

struct LevelEval {
  int level = 0;
  int episodes = 0;
  double success = 0.0;
  double i_sem = 0.0;
  double s_f = 0.0;
  double seg = 0.0;
  double s_e = 0.0;
  double total = 0.0;
};

struct NightStats {
  std::size_t video_pairs = 0;
  std::size_t planner_pairs = 0;
  std::vector<double> margins_before;  // simulator pairs then planner pairs
  std::vector<double> margins_after;
  double vanish_before = 0.0;  // mean vanish probability over kinds in mined tasks
  double vanish_after = 0.0;
  double sim_loss = 0.0;
  double planner_loss = 0.0;
};

struct PhaseRecord {
  std::string name;  // day1, night1, ...
  bool daytime = true;
  int cycle = 1;
  int bin = 1;
  std::size_t experiences = 0;
  std::size_t planner_sim_calls = 0;
  std::optional<NightStats> night;
  std::vector<LevelEval> eval;
  nlohmann::json curriculum;
};

struct EvolutionReport {
  LoopConfig config;
  std::vector<LevelEval> initial_eval;
  std::vector<PhaseRecord> phases;
  std::vector<LevelEval> final_eval;
  std::vector<int> phase_difficulties;
  double peak_level1_success = 0.0;
  double final_level1_success = 0.0;
};

nlohmann::json report_to_json(const EvolutionReport& r);

struct TaskSplit {
  std::map<int, std::vector<TaskEntry>> train;
  std::map<int, std::vector<TaskEntry>> heldout;
};

// Held-out fraction of each bin, chosen once from the seed.
TaskSplit split_tasks(const TaskRepository& repo, double holdout_fraction, std::uint64_t seed);

class Evolution {
 public:
  Evolution(LoopConfig config, const std::vector<Scene>& scenes, const TaskRepository& repo);

  const LoopConfig& config() const { return config_; }
  const TaskSplit& split() const { return split_; }
  const std::vector<MetricsRow>& metrics() const { return metrics_; }
  const WorldState& initial_state_of(const std::string& scene_id) const;

  SimulatorParams sim;
  PlannerParams planner;
  Curriculum curriculum;

  // Optional sinks for the experience and pair stores.
  std::function<void(const Experience&)> on_experience;
  std::function<void(const PreferencePair&)> on_pair;
  // Called with the phase name (day1, night1, ...) after each phase completes.
  std::function<void(const std::string&)> on_phase_end;

  void bootstrap();
  // Fixed-seed success probe on a bin's training tasks, followed by a curriculum checkpoint.
  void probe_and_checkpoint(int bin);

  // Both return the number of experiences appended to `out`.
  std::size_t daytime_simulator(int cycle, int bin, int first_iteration, int iterations, bool learn,
                                std::vector<Experience>& out);
  std::size_t daytime_planner(int cycle, int first_iteration, int iterations, bool learn,
                              std::vector<Experience>& out, std::size_t& sim_calls);
  NightStats nighttime(int cycle, int bin, std::span<const Experience> experiences);

  // Highest bin whose windowed success has reached the saturation threshold (at least 1).
  int saturated_bin() const;

  std::vector<LevelEval> evaluate(const SimulatorParams& params, const std::vector<int>& levels,
                                  int episodes) const;

  EvolutionReport run();

 private:
  Trajectory rollout(const SimulatorParams& params, const TaskEntry& task, Rng& rng) const;

  LoopConfig config_;
  TaskSplit split_;
  std::map<std::string, WorldState> init_states_;
  std::vector<MetricsRow> metrics_;
};

EvolutionReport run_evolution(const LoopConfig& config, const std::vector<Scene>& scenes,
                              const TaskRepository& repo, std::vector<MetricsRow>* metrics = nullptr);

}  // namespace roboevolve
