#include "roboevolve/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void OptimConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw Error(ErrorCode::ConfigInvalid, "clip_eps must lie in (0,1)");
  if (!(beta > 0.0)) throw Error(ErrorCode::ConfigInvalid, "beta must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::ConfigInvalid, "learning rate must be finite and >= 0");
  if (epochs < 1) throw Error(ErrorCode::ConfigInvalid, "epochs must be at least 1");
  if (group_size < 2) throw Error(ErrorCode::ConfigInvalid, "group size must be at least 2");
}

std::vector<double> grpo_advantages(std::span<const double> rewards, bool normalize_std) {
  const std::size_t k = rewards.size();
  if (k < 2) throw Error(ErrorCode::GroupTooSmall, "GRPO group needs at least 2 rewards");
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(k);
  std::vector<double> adv(k);
  for (std::size_t i = 0; i < k; ++i) adv[i] = rewards[i] - mean;
  if (normalize_std) {
    double var = 0.0;
    for (double a : adv) var += a * a;
    const double sd = std::sqrt(var / static_cast<double>(k));
    if (sd > 1e-12)
      for (double& a : adv) a /= sd;
  }
  return adv;
}

ObjectiveResult grpo_objective_and_grad(std::span<const double> params, const LogProbFn& logprob,
                                        std::span<const double> old_logprobs, std::span<const double> advantages,
                                        double clip_eps, bool use_min_surrogate) {
  const std::size_t k = advantages.size();
  if (k < 2) throw Error(ErrorCode::GroupTooSmall, "GRPO group needs at least 2 samples");
  if (old_logprobs.size() != k) throw Error(ErrorCode::ConfigInvalid, "old log-prob count differs from group size");
  ObjectiveResult out;
  out.grad.assign(params.size(), 0.0);
  std::vector<double> g(params.size());
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::fill(g.begin(), g.end(), 0.0);
    const double lp = logprob(params, i, g);
    const double ratio = std::exp(lp - old_logprobs[i]);
    if (!std::isfinite(ratio)) throw Error(ErrorCode::NonFiniteRatio, "importance ratio is not finite");
    const double a = advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const bool inside = ratio >= 1.0 - clip_eps && ratio <= 1.0 + clip_eps;
    double term;
    bool live;
    if (use_min_surrogate) {
      term = std::min(ratio * a, clipped * a);
      live = inside || ratio * a <= clipped * a;
    } else {
      term = clipped * a;
      live = inside;
    }
    out.value += inv_k * term;
    if (live)
      for (std::size_t d = 0; d < g.size(); ++d) out.grad[d] += inv_k * a * ratio * g[d];
  }
  return out;
}

DpoResult dpo_loss_and_grad(std::span<const double> params, const PairLogRatioFn& log_ratio, double ref_log_ratio,
                            double beta) {
  DpoResult out;
  out.grad.assign(params.size(), 0.0);
  const double r = log_ratio(params, out.grad);
  if (!std::isfinite(r) || !std::isfinite(ref_log_ratio))
    throw Error(ErrorCode::NonFiniteLogProb, "DPO log-probability is not finite");
  const double z = beta * (r - ref_log_ratio);
  out.margin = z;
  out.loss = softplus(-z);
  const double coef = -beta * sigmoid(-z);
  for (double& g : out.grad) g *= coef;
  return out;
}

PairLogRatioFn pair_from_logprob(LogProbFn logprob) {
  return [fn = std::move(logprob)](std::span<const double> params, std::span<double> grad) {
    if (grad.empty()) return fn(params, 0, {}) - fn(params, 1, {});
    std::vector<double> gl(grad.size(), 0.0);
    const double lw = fn(params, 0, grad);
    const double ll = fn(params, 1, gl);
    for (std::size_t d = 0; d < grad.size(); ++d) grad[d] -= gl[d];
    return lw - ll;
  };
}

double finite_diff_check(const ObjectiveFn& f, std::span<const double> params, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::ConfigInvalid, "finite-difference step must be positive");
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> analytic(x.size(), 0.0), scratch(x.size());
  f(x, analytic);
  double worst = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double keep = x[d];
    x[d] = keep + h;
    const double up = f(x, scratch);
    x[d] = keep - h;
    const double down = f(x, scratch);
    x[d] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[d]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[d] - numeric) / denom);
  }
  return worst;
}

void ascend(std::span<double> params, std::span<const double> grad, double lr) {
  if (grad.size() != params.size()) throw Error(ErrorCode::ConfigInvalid, "gradient size mismatch");
  if (!all_finite(grad)) throw Error(ErrorCode::NonFiniteParams, "gradient is not finite");
  for (std::size_t d = 0; d < params.size(); ++d) params[d] += lr * grad[d];
  if (!all_finite(params)) throw Error(ErrorCode::NonFiniteParams, "parameters became non-finite");
}

void descend(std::span<double> params, std::span<const double> grad, double lr) { ascend(params, grad, -lr); }

SimulatorParams simulator_params_from(std::span<const double> values) {
  SimulatorParams p;
  if (values.size() != p.logits.size()) throw Error(ErrorCode::ConfigInvalid, "simulator parameter size mismatch");
  std::copy(values.begin(), values.end(), p.logits.begin());
  return p;
}

PlannerParams planner_params_from(std::span<const double> values, double temperature) {
  PlannerParams p;
  if (values.size() != p.weights.size()) throw Error(ErrorCode::ConfigInvalid, "planner parameter size mismatch");
  std::copy(values.begin(), values.end(), p.weights.begin());
  p.temperature = temperature;
  return p;
}

LogProbFn simulator_logprob_fn(std::vector<const Trajectory*> trajectories) {
  return [trajs = std::move(trajectories)](std::span<const double> params, std::size_t index,
                                           std::span<double> grad) {
    const SimulatorParams p = simulator_params_from(params);
    const Trajectory& t = *trajs.at(index);
    return grad.empty() ? trajectory_logprob(p, t) : trajectory_logprob_grad(p, t, grad);
  };
}

LogProbFn planner_logprob_fn(std::vector<std::pair<const CandidateSet*, std::size_t>> choices, double temperature) {
  return [choices = std::move(choices), temperature](std::span<const double> params, std::size_t index,
                                                     std::span<double> grad) {
    const PlannerParams p = planner_params_from(params, temperature);
    const auto& [set, idx] = choices.at(index);
    return grad.empty() ? plan_logprob(p, *set, idx) : plan_logprob_grad(p, *set, idx, grad);
  };
}

PairLogRatioFn simulator_pair_fn(const Trajectory& win, const Trajectory& lose) {
  // Signed mode counts per kind: +1 for each winner action, -1 for each loser action.
  std::array<int, kSimulatorParamCount> coef{};
  auto add = [&](const Trajectory& t, int sign) {
    for (std::size_t i = 0; i < t.modes.size(); ++i)
      coef[SimulatorParams::index(t.plan.actions[i].kind, t.modes[i])] += sign;
  };
  add(win, 1);
  add(lose, -1);
  return [coef](std::span<const double> params, std::span<double> grad) {
    const SimulatorParams p = simulator_params_from(params);
    double total = 0.0;
    for (ActionKind k : kAllActionKinds) {
      const std::size_t base = SimulatorParams::index(k, OutcomeMode::Faithful);
      int n = 0;
      for (std::size_t m = 0; m < kModeCount; ++m) {
        const int c = coef[base + m];
        n += c;
        if (c != 0) total += c * p.logits[base + m];
        if (!grad.empty()) grad[base + m] += c;
      }
      if (n == 0) continue;
      // log p(m) = x_m - lse, so each net action contributes -lse.
      double mx = p.logits[base];
      for (std::size_t m = 1; m < kModeCount; ++m) mx = std::max(mx, p.logits[base + m]);
      double z = 0.0;
      for (std::size_t m = 0; m < kModeCount; ++m) z += std::exp(p.logits[base + m] - mx);
      const double lse = mx + std::log(z);
      total -= n * lse;
      if (!grad.empty())
        for (std::size_t m = 0; m < kModeCount; ++m) grad[base + m] -= n * std::exp(p.logits[base + m] - lse);
    }
    return total;
  };
}

PairLogRatioFn planner_pair_fn(const CandidateSet& set, std::size_t win, std::size_t lose, double temperature) {
  PlanFeatures diff{};
  for (std::size_t d = 0; d < kPlanFeatureCount; ++d) diff[d] = set.features.at(win)[d] - set.features.at(lose)[d];
  return [diff, temperature](std::span<const double> params, std::span<double> grad) {
    double s = 0.0;
    for (std::size_t d = 0; d < kPlanFeatureCount; ++d) {
      s += params[d] * diff[d];
      if (!grad.empty()) grad[d] += diff[d] / temperature;
    }
    return s / temperature;
  };
}

}  // namespace roboevolve
