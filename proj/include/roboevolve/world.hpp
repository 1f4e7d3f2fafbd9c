#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "roboevolve/action.hpp"
#include "roboevolve/rng.hpp"
#include "roboevolve/world_state.hpp"

namespace roboevolve {

enum class OutcomeMode : std::uint8_t { Faithful, Skip, WrongTarget, Vanish, Teleport };

inline constexpr std::size_t kModeCount = 5;
inline constexpr std::size_t kSimulatorParamCount = kActionKindCount * kModeCount;

// Largest per-step displacement (grid cells, Chebyshev) that still counts as smooth motion.
inline constexpr int kSmoothnessThreshold = 2;
inline constexpr std::size_t kFramesPerAction = 3;  // approach, act, settle

std::string_view to_string(OutcomeMode m);
std::optional<OutcomeMode> outcome_mode_from_string(std::string_view s);

// 13 action kinds x 5 outcome modes of logits; the mode distribution for a
// kind is the softmax over its row.
struct SimulatorParams {
  std::array<double, kSimulatorParamCount> logits{};

  static std::size_t index(ActionKind k, OutcomeMode m) {
    return static_cast<std::size_t>(k) * kModeCount + static_cast<std::size_t>(m);
  }
  double& at(ActionKind k, OutcomeMode m) { return logits[index(k, m)]; }
  double at(ActionKind k, OutcomeMode m) const { return logits[index(k, m)]; }

  std::array<double, kModeCount> probabilities(ActionKind k) const;
  std::array<double, kModeCount> log_probabilities(ActionKind k) const;

  std::span<double> values() { return logits; }
  std::span<const double> values() const { return logits; }

  static SimulatorParams uniform() { return {}; }
  // +10 on faithful and -10 elsewhere: a near-deterministic faithful simulator.
  static SimulatorParams oracle();

  bool operator==(const SimulatorParams&) const = default;
};

struct Frame {
  std::size_t index = 0;
  WorldState state;
};

struct Trajectory {
  Plan plan;
  std::vector<Frame> frames;
  // segments[i] = inclusive frame range produced by action i
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::vector<OutcomeMode> modes;
  std::vector<double> logprob_terms;

  const WorldState& initial() const { return frames.front().state; }
  const WorldState& final_state() const { return frames.back().state; }
  // State immediately before action i executes.
  const WorldState& entry_state(std::size_t i) const { return frames[segments[i].first - 1].state; }
  const WorldState& exit_state(std::size_t i) const { return frames[segments[i].second].state; }
};

struct ActionOutcome {
  std::array<WorldState, kFramesPerAction> frames;
  WorldState next;
};

// Executes one action under the given outcome mode. Throws Error(UnknownObject)
// when an argument names an object or region the scene never contained.
ActionOutcome apply_action(const WorldState& state, const AtomicAction& action, OutcomeMode mode, Rng& rng);

Trajectory sample_trajectory(const SimulatorParams& params, const Plan& plan, const WorldState& init, Rng& rng);

double trajectory_logprob(const SimulatorParams& params, const Trajectory& traj);

// Returns the log-probability and accumulates its gradient with respect to
// the logits into `grad` (size kSimulatorParamCount).
double trajectory_logprob_grad(const SimulatorParams& params, const Trajectory& traj, std::span<double> grad);

// Splits the plan into consecutive chunks of at most d_cap actions and
// simulates each chunk from the previous chunk's final state.
Trajectory segmentwise_simulate(const SimulatorParams& params, const Plan& plan, int d_cap, const WorldState& init,
                                Rng& rng);

std::vector<std::size_t> chunk_lengths(std::size_t plan_length, int d_cap);

// Experience-store form: plan, modes, log-prob terms, and per-frame atom deltas.
nlohmann::json trajectory_to_json(const Trajectory& traj);

}  // namespace roboevolve
