#pragma once

#include <string>
#include <utility>

#include "json.hpp"
#include "roboevolve/action.hpp"
#include "roboevolve/world.hpp"

namespace roboevolve {

// Ablation switches. A disabled physical term contributes 0; a disabled
// semantic gate is replaced by 1. The formula shape never changes.
struct RewardToggles {
  bool semantic = true;
  bool frame = true;
  bool segment = true;
  bool episode = true;
  // Literal reading of the segment weight: w_s = 1/M applied on top of the
  // already normalized segment score.
  bool double_normalize_segments = false;

  bool all_enabled() const { return semantic && frame && segment && episode && !double_normalize_segments; }
};

struct RewardBreakdown {
  double i_sem = 0.0;
  double s_f = 0.0;
  double seg = 0.0;
  double s_e = 0.0;
  double total = 0.0;
  std::string revised_goal;

  // Semantically aligned, frame-consistent, every segment executed, goal reached.
  bool perfect() const { return i_sem == 1.0 && s_f == 1.0 && seg == 1.0 && s_e == 1.0; }
  bool operator==(const RewardBreakdown&) const = default;
};

inline constexpr std::string_view kFailedClause = "[failed]";

// Critic pass: rewrites only the goal clauses the trajectory contradicts.
// Returns (G', fraction of clauses left unchanged).
std::pair<std::string, double> semantic_indicator(const Plan& goal, const Trajectory& traj);

int frame_consistency(const Trajectory& traj);

// Fraction of actions whose postconditions hold across their own segment.
// Throws Error(SegmentMismatch) unless the segment map covers exactly the plan.
double segment_score(const Trajectory& traj, const Plan& plan);

int episode_success(const Trajectory& traj, const Plan& goal);

RewardBreakdown total_reward(const Plan& goal, const Trajectory& traj, const RewardToggles& toggles = {});

// Consensus-gated planner reward: 1[pi == pi*] * (1 + eta * r_sim).
double planner_reward(const Plan& plan, const Plan& consensus, double r_sim, double eta);

nlohmann::json breakdown_to_json(const RewardBreakdown& b);

}  // namespace roboevolve
