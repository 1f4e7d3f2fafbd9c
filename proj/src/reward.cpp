#include "roboevolve/reward.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

// Describes what segment i actually did when it contradicts `intended`:
// the same kind of action aimed at a different target, if one explains the
// observed transition.
std::optional<AtomicAction> explain_segment(const WorldState& pre, const WorldState& post,
                                            const AtomicAction& intended) {
  const std::size_t slot = target_slot(intended.kind);
  std::vector<std::string> names;
  for (const auto& [id, _] : pre.statics->affordances) names.push_back(id);
  if (intended.kind == ActionKind::Place)
    for (const auto& [r, _] : pre.statics->regions) names.push_back(r);
  for (const auto& name : names) {
    if (name == intended.args[slot]) continue;
    AtomicAction alt = intended;
    alt.args[slot] = name;
    if (postcondition_holds(pre, post, alt)) return alt;
  }
  return std::nullopt;
}

double lenient_segment_score(const Trajectory& traj, const Plan& goal) {
  if (goal.empty()) return 0.0;
  const std::size_t n = std::min(goal.size(), traj.segments.size());
  int hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    hits += postcondition_holds(traj.entry_state(i), traj.exit_state(i), goal.actions[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(goal.size());
}

}  // namespace

std::pair<std::string, double> semantic_indicator(const Plan& goal, const Trajectory& traj) {
  if (goal.empty()) return {std::string(), 0.0};
  std::string revised;
  std::size_t unchanged = 0;
  for (std::size_t i = 0; i < goal.size(); ++i) {
    const AtomicAction& clause = goal.actions[i];
    std::string text;
    if (i < traj.segments.size()) {
      const WorldState& pre = traj.entry_state(i);
      const WorldState& post = traj.exit_state(i);
      if (postcondition_holds(pre, post, clause)) {
        text = clause.clause();
        ++unchanged;
      } else if (auto alt = explain_segment(pre, post, clause)) {
        text = alt->clause();
      } else {
        text = std::string(kFailedClause) + " " + clause.clause();
      }
    } else {
      text = std::string(kFailedClause) + " " + clause.clause();
    }
    if (i) revised += ';';
    revised += text;
  }
  return {revised, static_cast<double>(unchanged) / static_cast<double>(goal.size())};
}

int frame_consistency(const Trajectory& traj) {
  const auto& frames = traj.frames;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    const auto& cur = frames[t].state;
    const auto& nxt = frames[t + 1].state;
    for (const auto& [id, cell] : cur.positions) {
      auto it = nxt.positions.find(id);
      if (it == nxt.positions.end()) return 0;  // persistence
      if (chebyshev(cell, it->second) > kSmoothnessThreshold) return 0;  // smoothness
    }
  }
  // Co-occupancy is checked where the scene is at rest: the initial frame and
  // the settle frame of every segment. Approach/act frames carry objects in motion.
  auto overlapping = [](const WorldState& s) {
    std::map<Cell, int> seen;
    for (const auto& [id, cell] : s.positions) {
      if (s.contained(id) || s.holding == id) continue;
      if (++seen[cell] > 1) return true;
    }
    return false;
  };
  if (!frames.empty() && overlapping(frames.front().state)) return 0;
  for (std::size_t i = 0; i < traj.segments.size(); ++i)
    if (overlapping(traj.exit_state(i))) return 0;
  return 1;
}

double segment_score(const Trajectory& traj, const Plan& plan) {
  if (plan.empty() || traj.segments.size() != plan.size())
    throw Error(ErrorCode::SegmentMismatch, "segment map covers " + std::to_string(traj.segments.size()) +
                                                " actions, plan has " + std::to_string(plan.size()));
  return lenient_segment_score(traj, plan);
}

int episode_success(const Trajectory& traj, const Plan& goal) {
  if (traj.frames.empty()) return 0;
  const WorldState& init = traj.initial();
  auto target = replay_faithful(init, goal);
  if (!target) return 0;
  const auto before = init.atoms();
  const auto after = target->atoms();
  const auto final_atoms = traj.final_state().atoms();
  for (const auto& a : after)
    if (!before.count(a) && !final_atoms.count(a)) return 0;
  for (const auto& a : before)
    if (!after.count(a) && final_atoms.count(a)) return 0;
  return 1;
}

RewardBreakdown total_reward(const Plan& goal, const Trajectory& traj, const RewardToggles& toggles) {
  RewardBreakdown b;
  auto [revised, i_sem] = semantic_indicator(goal, traj);
  b.revised_goal = std::move(revised);
  b.i_sem = toggles.semantic ? i_sem : 1.0;
  b.s_f = toggles.frame ? frame_consistency(traj) : 0.0;
  b.seg = toggles.segment ? lenient_segment_score(traj, goal) : 0.0;
  b.s_e = toggles.episode ? episode_success(traj, goal) : 0.0;
  const double seg_term =
      toggles.double_normalize_segments && !goal.empty() ? b.seg / static_cast<double>(goal.size()) : b.seg;
  b.total = b.i_sem * (b.s_f + seg_term + b.s_e);
  return b;
}

double planner_reward(const Plan& plan, const Plan& consensus, double r_sim, double eta) {
  if (eta < 0.0) throw Error(ErrorCode::ConfigInvalid, "eta must be non-negative");
  return plan == consensus ? 1.0 + eta * r_sim : 0.0;
}

nlohmann::json breakdown_to_json(const RewardBreakdown& b) {
  return {{"i_sem", b.i_sem}, {"s_f", b.s_f},     {"seg", b.seg},
          {"s_e", b.s_e},     {"total", b.total}, {"revised_goal", b.revised_goal}};
}

}  // namespace roboevolve
