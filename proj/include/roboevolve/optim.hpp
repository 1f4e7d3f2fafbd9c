#pragma once

#include <functional>
#include <span>
#include <vector>

#include "roboevolve/planner.hpp"
#include "roboevolve/world.hpp"

namespace roboevolve {

struct OptimConfig {
  double clip_eps = 0.2;
  double beta = 0.1;
  double lr = 0.05;
  int epochs = 4;
  int group_size = 16;
  bool normalize_advantages = false;  // divide by the group standard deviation
  bool use_min_surrogate = false;     // PPO-style min(ratio*A, clip(ratio)*A)

  void validate() const;  // throws Error(ConfigInvalid)
};

// Log-probability of sample `index` under the flat parameter vector. When
// `grad` is non-empty the gradient is accumulated into it.
using LogProbFn = std::function<double(std::span<const double> params, std::size_t index, std::span<double> grad)>;

// log p(winner) - log p(loser) under the flat parameter vector; the gradient
// is accumulated into `grad` when it is non-empty.
using PairLogRatioFn = std::function<double(std::span<const double> params, std::span<double> grad)>;

// Differentiable scalar: returns the value and writes the gradient into `grad`.
using ObjectiveFn = std::function<double(std::span<const double> params, std::span<double> grad)>;

struct ObjectiveResult {
  double value = 0.0;
  std::vector<double> grad;
};

// A_k = R_k - mean(R), optionally divided by the group std. Throws GroupTooSmall for K < 2.
std::vector<double> grpo_advantages(std::span<const double> rewards, bool normalize_std = false);

// J = (1/K) sum clip(ratio_k, 1-eps, 1+eps) * A_k. The gradient of a term is
// zero whenever its ratio sits outside the clip interval.
ObjectiveResult grpo_objective_and_grad(std::span<const double> params, const LogProbFn& logprob,
                                        std::span<const double> old_logprobs, std::span<const double> advantages,
                                        double clip_eps, bool use_min_surrogate = false);

struct DpoResult {
  double loss = 0.0;
  double margin = 0.0;  // beta * (delta_win - delta_lose)
  std::vector<double> grad;
};

// L = -log sigmoid(beta * [(lw - ll) - (ref_w - ref_l)]).
DpoResult dpo_loss_and_grad(std::span<const double> params, const PairLogRatioFn& log_ratio, double ref_log_ratio,
                            double beta);

// Pair form of a LogProbFn whose index 0 is the winner and index 1 the loser.
PairLogRatioFn pair_from_logprob(LogProbFn logprob);

double finite_diff_check(const ObjectiveFn& f, std::span<const double> params, double h = 1e-5);

void ascend(std::span<double> params, std::span<const double> grad, double lr);
void descend(std::span<double> params, std::span<const double> grad, double lr);

// Adapters exposing the two policies through LogProbFn.
LogProbFn simulator_logprob_fn(std::vector<const Trajectory*> trajectories);
LogProbFn planner_logprob_fn(std::vector<std::pair<const CandidateSet*, std::size_t>> choices, double temperature);
// Exact pair forms: terms shared by winner and loser (per-kind normalizers,
// the candidate-set partition function) cancel before evaluation.
PairLogRatioFn simulator_pair_fn(const Trajectory& win, const Trajectory& lose);
PairLogRatioFn planner_pair_fn(const CandidateSet& set, std::size_t win, std::size_t lose, double temperature);

SimulatorParams simulator_params_from(std::span<const double> values);
PlannerParams planner_params_from(std::span<const double> values, double temperature);

}  // namespace roboevolve
