#include "roboevolve/mining.hpp"

#include "roboevolve/rng.hpp"

namespace roboevolve {

namespace {

std::optional<std::size_t> first_positive(const Experience& e) {
  for (std::size_t i = 0; i < e.breakdowns.size() && i < e.trajectories.size(); ++i)
    if (is_positive(e.breakdowns[i])) return i;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(PairLevel l) {
  switch (l) {
    case PairLevel::Video: return "video";
    case PairLevel::Planning: return "P";
    case PairLevel::Understanding: return "U";
    case PairLevel::Transition: return "T";
  }
  return "?";
}

bool is_positive(const RewardBreakdown& b) { return b.s_e == 1.0 && b.i_sem == 1.0 && b.total == 3.0; }

bool is_negative(const RewardBreakdown& b) { return b.s_e == 0.0 && (b.s_f == 1.0 || b.seg == 1.0); }

PlannerContext planning_context(const std::string& scene_id, const WorldState& init, const Plan& task) {
  PlannerContext c;
  c.scene_id = scene_id;
  c.init = init;
  c.task = task;
  c.min_difficulty = c.max_difficulty = static_cast<int>(task.size());
  return c;
}

std::vector<PreferencePair> mine_video_pairs(std::span<const Experience> experiences) {
  std::vector<PreferencePair> out;
  for (const auto& e : experiences) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < e.breakdowns.size() && i < e.trajectories.size(); ++i) {
      if (is_positive(e.breakdowns[i])) pos.push_back(i);
      else if (is_negative(e.breakdowns[i])) neg.push_back(i);
    }
    if (pos.empty()) continue;
    for (std::size_t j = 0; j < neg.size(); ++j) {
      PreferencePair p;
      p.level = PairLevel::Video;
      p.scene_id = e.scene_id;
      p.bin = e.bin;
      p.win_traj = e.trajectories[pos[j % pos.size()]];
      p.lose_traj = e.trajectories[neg[j]];
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<PreferencePair> build_planning_pairs(std::span<const Experience> experiences, std::uint64_t seed) {
  std::vector<PreferencePair> out;
  for (const auto& e : experiences) {
    if (!e.vote || e.trajectories.empty()) continue;
    const Plan& best = e.vote->consensus;
    const PlannerContext ctx = planning_context(e.scene_id, e.trajectories.front().initial(), e.task);
    auto emit = [&](const Plan& loser) {
      PreferencePair p;
      p.level = PairLevel::Planning;
      p.scene_id = e.scene_id;
      p.bin = e.bin;
      p.context = ctx;
      p.winner = best;
      p.loser = loser;
      out.push_back(std::move(p));
    };
    if (e.vote->runner_up) emit(*e.vote->runner_up);
    if (best.size() >= 2) {
      Rng rng = Rng::substream(seed, StreamTag::Mining,
                               {static_cast<std::uint64_t>(e.phase), static_cast<std::uint64_t>(e.iteration),
                                static_cast<std::uint64_t>(e.bin)});
      const std::size_t len = 1 + static_cast<std::size_t>(rng.below(best.size() - 1));
      Plan clip;
      clip.actions.assign(best.actions.begin(), best.actions.begin() + static_cast<std::ptrdiff_t>(len));
      emit(clip);
    }
  }
  return out;
}

std::vector<PreferencePair> build_understanding_pairs(std::span<const Experience> experiences) {
  std::vector<PreferencePair> out;
  for (const auto& e : experiences) {
    if (!e.vote || !e.vote->runner_up) continue;
    const auto v = first_positive(e);
    if (!v) continue;
    PlannerContext ctx = planning_context(e.scene_id, e.trajectories[*v].initial(), e.task);
    ctx.level = ContextLevel::Understanding;
    ctx.video = e.trajectories[*v];
    PreferencePair p;
    p.level = PairLevel::Understanding;
    p.scene_id = e.scene_id;
    p.bin = e.bin;
    p.context = std::move(ctx);
    p.winner = e.task;
    p.loser = *e.vote->runner_up;
    if (p.winner != p.loser) out.push_back(std::move(p));
  }
  return out;
}

std::vector<PreferencePair> build_transition_pairs(std::span<const Experience> experiences) {
  std::vector<PreferencePair> out;
  for (const auto& e : experiences) {
    if (!e.vote || !e.vote->runner_up) continue;
    const auto v = first_positive(e);
    if (!v) continue;
    const Trajectory& t = e.trajectories[*v];
    PlannerContext ctx = planning_context(e.scene_id, t.initial(), e.task);
    ctx.level = ContextLevel::Transition;
    ctx.final_frame = t.final_state();
    PreferencePair p;
    p.level = PairLevel::Transition;
    p.scene_id = e.scene_id;
    p.bin = e.bin;
    p.context = std::move(ctx);
    p.winner = e.vote->consensus;
    p.loser = *e.vote->runner_up;
    out.push_back(std::move(p));
  }
  return out;
}

nlohmann::json pair_to_json(const PreferencePair& p) {
  nlohmann::json j = {{"level", to_string(p.level)}, {"scene_id", p.scene_id}, {"bin", p.bin}};
  if (p.level == PairLevel::Video) {
    auto modes = [](const Trajectory& t) {
      std::vector<std::string> m;
      for (auto x : t.modes) m.emplace_back(to_string(x));
      return m;
    };
    j["goal"] = p.win_traj->plan.goal_text();
    j["winner_modes"] = modes(*p.win_traj);
    j["loser_modes"] = modes(*p.lose_traj);
  } else {
    j["goal"] = p.context ? p.context->task.goal_text() : std::string();
    j["winner"] = p.winner.goal_text();
    j["loser"] = p.loser.goal_text();
  }
  return j;
}

nlohmann::json experience_to_json(const Experience& e) {
  nlohmann::json j = {{"scene_id", e.scene_id}, {"bin", e.bin},       {"phase", e.phase},
                      {"iteration", e.iteration}, {"goal", e.task.goal_text()}};
  if (!e.plan_samples.empty()) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : e.plan_samples) samples.push_back({{"plan", s.plan.goal_text()}, {"logprob", s.logprob}});
    j["plan_samples"] = std::move(samples);
  }
  if (e.vote) {
    j["consensus"] = e.vote->consensus.goal_text();
    j["runner_up"] = e.vote->runner_up ? nlohmann::json(e.vote->runner_up->goal_text()) : nlohmann::json(nullptr);
  }
  nlohmann::json rollouts = nlohmann::json::array();
  for (std::size_t i = 0; i < e.trajectories.size(); ++i) {
    nlohmann::json r = trajectory_to_json(e.trajectories[i]);
    if (i < e.breakdowns.size()) r["reward"] = breakdown_to_json(e.breakdowns[i]);
    rollouts.push_back(std::move(r));
  }
  j["rollouts"] = std::move(rollouts);
  return j;
}

}  // namespace roboevolve
