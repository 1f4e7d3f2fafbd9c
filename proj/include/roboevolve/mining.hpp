#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "roboevolve/planner.hpp"
#include "roboevolve/reward.hpp"
#include "roboevolve/world.hpp"

namespace roboevolve {

enum class PairLevel : std::uint8_t { Video, Planning, Understanding, Transition };

std::string_view to_string(PairLevel l);

// One daytime record: a task, the rollouts it produced and, for planner
// iterations, the vote over sampled plans.
struct Experience {
  std::string scene_id;
  int bin = 1;
  int phase = 0;
  int iteration = 0;
  Plan task;
  std::vector<PlanSample> plan_samples;
  std::optional<VoteResult> vote;
  std::vector<Trajectory> trajectories;
  std::vector<RewardBreakdown> breakdowns;  // one per trajectory, full reward
};

struct PreferencePair {
  PairLevel level = PairLevel::Video;
  std::string scene_id;
  int bin = 1;
  // Video pairs.
  std::optional<Trajectory> win_traj;
  std::optional<Trajectory> lose_traj;
  // Planner pairs.
  std::optional<PlannerContext> context;
  Plan winner;
  Plan loser;
};

bool is_positive(const RewardBreakdown& b);  // V+
bool is_negative(const RewardBreakdown& b);  // V-

std::vector<PreferencePair> mine_video_pairs(std::span<const Experience> experiences);
std::vector<PreferencePair> build_planning_pairs(std::span<const Experience> experiences, std::uint64_t seed);
std::vector<PreferencePair> build_understanding_pairs(std::span<const Experience> experiences);
std::vector<PreferencePair> build_transition_pairs(std::span<const Experience> experiences);

// Planner contexts for mined pairs and for planner sampling.
PlannerContext planning_context(const std::string& scene_id, const WorldState& init, const Plan& task);

nlohmann::json pair_to_json(const PreferencePair& p);
nlohmann::json experience_to_json(const Experience& e);

}  // namespace roboevolve
