#include "roboevolve/world.hpp"

#include <algorithm>
#include <cmath>

#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

constexpr std::array<std::string_view, kModeCount> kModeNames = {"faithful", "skip", "wrong_target", "vanish",
                                                                 "teleport"};

// Argument slots that name objects (or, for place/sweep, possibly regions).
std::vector<std::size_t> reference_slots(ActionKind k) {
  switch (k) {
    case ActionKind::Place:
    case ActionKind::StackOn:
    case ActionKind::Wipe:
      return {0, 1};
    case ActionKind::Sweep:
      return {0, 1, 2};
    default:
      return {0};
  }
}

void check_references(const WorldState& s, const AtomicAction& a) {
  if (a.args.size() != arity(a.kind))
    throw Error(ErrorCode::SchemaViolation, "arity mismatch for " + a.clause());
  for (auto slot : reference_slots(a.kind)) {
    const auto& name = a.args[slot];
    if (!s.statics->affordances.count(name) && !s.statics->regions.count(name))
      throw Error(ErrorCode::UnknownObject, "'" + name + "' in " + a.clause());
  }
}

Cell lerp(Cell from, Cell to, int step) {
  auto axis = [&](int a, int b) {
    return a + static_cast<int>(std::lround(static_cast<double>(step) * (b - a) / 3.0));
  };
  return {axis(from.x, to.x), axis(from.y, to.y)};
}

// Frames for an effect applied over three steps: moving objects slide along a
// straight line so each inter-frame step stays within the smoothness bound.
std::array<WorldState, kFramesPerAction> smooth_frames(const WorldState& pre, const WorldState& post) {
  std::array<WorldState, kFramesPerAction> frames{pre, pre, post};
  for (const auto& [id, to] : post.positions) {
    auto it = pre.positions.find(id);
    if (it == pre.positions.end() || it->second == to) continue;
    frames[0].positions[id] = lerp(it->second, to, 1);
    frames[1].positions[id] = lerp(it->second, to, 2);
  }
  return frames;
}

Cell farthest_cell(const GridSize& grid, Cell from) {
  Cell best = from;
  int best_d = -1;
  for (int x = 0; x < grid.width; ++x)
    for (int y = 0; y < grid.height; ++y) {
      const int d = chebyshev({x, y}, from);
      if (d > best_d) {
        best_d = d;
        best = {x, y};
      }
    }
  return best;
}

WorldState without_object(const WorldState& s, const std::string& id) {
  WorldState n = s;
  n.positions.erase(id);
  n.device_state.erase(id);
  for (auto it = n.on.begin(); it != n.on.end();)
    it = (it->first == id || it->second == id) ? n.on.erase(it) : std::next(it);
  for (auto it = n.in.begin(); it != n.in.end();)
    it = (it->first == id || it->second == id) ? n.in.erase(it) : std::next(it);
  if (n.holding == id) n.holding.reset();
  return n;
}

ActionOutcome unchanged(const WorldState& s) { return {{s, s, s}, s}; }

}  // namespace

std::string_view to_string(OutcomeMode m) { return kModeNames[static_cast<std::size_t>(m)]; }

std::optional<OutcomeMode> outcome_mode_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i)
    if (kModeNames[i] == s) return static_cast<OutcomeMode>(i);
  return std::nullopt;
}

std::array<double, kModeCount> SimulatorParams::log_probabilities(ActionKind k) const {
  const std::size_t base = static_cast<std::size_t>(k) * kModeCount;
  double mx = logits[base];
  for (std::size_t m = 1; m < kModeCount; ++m) mx = std::max(mx, logits[base + m]);
  double z = 0.0;
  for (std::size_t m = 0; m < kModeCount; ++m) z += std::exp(logits[base + m] - mx);
  const double log_z = mx + std::log(z);
  std::array<double, kModeCount> out{};
  for (std::size_t m = 0; m < kModeCount; ++m) out[m] = logits[base + m] - log_z;
  return out;
}

std::array<double, kModeCount> SimulatorParams::probabilities(ActionKind k) const {
  auto lp = log_probabilities(k);
  std::array<double, kModeCount> out{};
  for (std::size_t m = 0; m < kModeCount; ++m) out[m] = std::exp(lp[m]);
  return out;
}

SimulatorParams SimulatorParams::oracle() {
  SimulatorParams p;
  for (auto k : kAllActionKinds)
    for (std::size_t m = 0; m < kModeCount; ++m)
      p.at(k, static_cast<OutcomeMode>(m)) = m == 0 ? 10.0 : -10.0;
  return p;
}

ActionOutcome apply_action(const WorldState& state, const AtomicAction& action, OutcomeMode mode, Rng& rng) {
  check_references(state, action);
  const std::string& subject = action.subject();

  switch (mode) {
    case OutcomeMode::Skip:
      return unchanged(state);

    case OutcomeMode::Faithful: {
      if (!preconditions_hold(state, action)) return unchanged(state);
      WorldState next = apply_effects(state, action);
      return {smooth_frames(state, next), next};
    }

    case OutcomeMode::WrongTarget: {
      const std::size_t slot = target_slot(action.kind);
      std::vector<AtomicAction> distractors;
      auto consider = [&](const std::string& name) {
        if (name == action.args[slot]) return;
        AtomicAction alt = action;
        alt.args[slot] = name;
        if (preconditions_hold(state, alt)) distractors.push_back(std::move(alt));
      };
      for (const auto& [id, _] : state.positions) consider(id);
      if (action.kind == ActionKind::Place)
        for (const auto& [name, _] : state.statics->regions) consider(name);
      if (distractors.empty()) return unchanged(state);
      const auto& alt = distractors[rng.below(distractors.size())];
      WorldState next = apply_effects(state, alt);
      return {smooth_frames(state, next), next};
    }

    case OutcomeMode::Vanish: {
      if (!state.present(subject)) return unchanged(state);
      WorldState gone = without_object(state, subject);
      return {{state, gone, gone}, gone};
    }

    case OutcomeMode::Teleport: {
      if (!state.present(subject)) return unchanged(state);
      WorldState next = preconditions_hold(state, action) ? apply_effects(state, action) : state;
      auto frames = smooth_frames(state, next);
      const Cell from = frames[0].positions.at(subject);
      frames[1].positions[subject] = farthest_cell(state.statics->grid, from);
      return {frames, next};
    }
  }
  return unchanged(state);
}

Trajectory sample_trajectory(const SimulatorParams& params, const Plan& plan, const WorldState& init, Rng& rng) {
  if (plan.empty()) throw Error(ErrorCode::EmptyPlan, "cannot simulate an empty plan");
  Trajectory t;
  t.plan = plan;
  t.frames.reserve(kFramesPerAction * plan.size() + 1);
  t.frames.push_back({0, init});
  WorldState current = init;
  for (const auto& action : plan.actions) {
    const auto lp = params.log_probabilities(action.kind);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t m = kModeCount - 1;
    for (std::size_t i = 0; i < kModeCount; ++i) {
      acc += std::exp(lp[i]);
      if (u < acc) {
        m = i;
        break;
      }
    }
    const auto mode = static_cast<OutcomeMode>(m);
    auto outcome = apply_action(current, action, mode, rng);
    const std::size_t first = t.frames.size();
    for (auto& f : outcome.frames) t.frames.push_back({t.frames.size(), std::move(f)});
    t.segments.emplace_back(first, t.frames.size() - 1);
    t.modes.push_back(mode);
    t.logprob_terms.push_back(lp[m]);
    current = std::move(outcome.next);
  }
  return t;
}

double trajectory_logprob(const SimulatorParams& params, const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t i = 0; i < traj.modes.size(); ++i)
    total += params.log_probabilities(traj.plan.actions[i].kind)[static_cast<std::size_t>(traj.modes[i])];
  return total;
}

double trajectory_logprob_grad(const SimulatorParams& params, const Trajectory& traj, std::span<double> grad) {
  double total = 0.0;
  for (std::size_t i = 0; i < traj.modes.size(); ++i) {
    const ActionKind k = traj.plan.actions[i].kind;
    const auto lp = params.log_probabilities(k);
    const auto m = static_cast<std::size_t>(traj.modes[i]);
    total += lp[m];
    const std::size_t base = static_cast<std::size_t>(k) * kModeCount;
    for (std::size_t j = 0; j < kModeCount; ++j) grad[base + j] -= std::exp(lp[j]);
    grad[base + m] += 1.0;
  }
  return total;
}

std::vector<std::size_t> chunk_lengths(std::size_t plan_length, int d_cap) {
  if (d_cap < 1) throw Error(ErrorCode::ConfigInvalid, "d_cap must be >= 1");
  std::vector<std::size_t> out;
  const auto cap = static_cast<std::size_t>(d_cap);
  for (std::size_t done = 0; done < plan_length; done += cap) out.push_back(std::min(cap, plan_length - done));
  return out;
}

Trajectory segmentwise_simulate(const SimulatorParams& params, const Plan& plan, int d_cap, const WorldState& init,
                                Rng& rng) {
  if (plan.empty()) throw Error(ErrorCode::EmptyPlan, "cannot simulate an empty plan");
  Trajectory out;
  out.plan = plan;
  out.frames.push_back({0, init});
  std::size_t start = 0;
  for (auto len : chunk_lengths(plan.size(), d_cap)) {
    Plan chunk;
    chunk.actions.assign(plan.actions.begin() + static_cast<long>(start),
                         plan.actions.begin() + static_cast<long>(start + len));
    Trajectory part = sample_trajectory(params, chunk, out.final_state(), rng);
    const std::size_t offset = out.frames.size() - 1;
    for (std::size_t f = 1; f < part.frames.size(); ++f)
      out.frames.push_back({out.frames.size(), std::move(part.frames[f].state)});
    for (auto [a, b] : part.segments) out.segments.emplace_back(a + offset, b + offset);
    out.modes.insert(out.modes.end(), part.modes.begin(), part.modes.end());
    out.logprob_terms.insert(out.logprob_terms.end(), part.logprob_terms.begin(), part.logprob_terms.end());
    start += len;
  }
  return out;
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
  using nlohmann::json;
  json modes = json::array();
  for (auto m : traj.modes) modes.push_back(std::string(to_string(m)));
  json deltas = json::array();
  std::set<std::string> prev;
  for (const auto& f : traj.frames) {
    auto atoms = f.state.atoms();
    json added = json::array(), removed = json::array();
    for (const auto& a : atoms)
      if (!prev.count(a)) added.push_back(a);
    for (const auto& a : prev)
      if (!atoms.count(a)) removed.push_back(a);
    deltas.push_back({{"add", added}, {"del", removed}});
    prev = std::move(atoms);
  }
  return {{"plan", traj.plan.goal_text()},
          {"modes", modes},
          {"logprob_terms", traj.logprob_terms},
          {"frames", deltas}};
}

}  // namespace roboevolve
