#include "roboevolve/planner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

// Argument slots that name scene entities (the rest are directions or values).
std::size_t reference_slots(ActionKind k) {
  switch (k) {
    case ActionKind::Push:
    case ActionKind::Zip:
    case ActionKind::TurnKnob:
    case ActionKind::ToggleSwitch:
    case ActionKind::TurnLever:
      return 1;
    default:
      return arity(k);
  }
}

struct SlotNeed {
  std::size_t slot;
  Affordance affordance;
  bool region_ok;
};

std::vector<SlotNeed> slot_needs(ActionKind k) {
  using A = Affordance;
  switch (k) {
    case ActionKind::Pick: return {{0, A::Pickable, false}};
    case ActionKind::Place: return {{0, A::Pickable, false}, {1, A::PlaceableTarget, true}};
    case ActionKind::Push: return {{0, A::Pushable, false}};
    case ActionKind::StackOn: return {{0, A::Stackable, false}, {1, A::Stackable, false}};
    case ActionKind::Wipe: return {{0, A::WipeableSurface, false}, {1, A::Tool, false}};
    case ActionKind::Sweep: return {{0, A::Pushable, false}, {1, A::Tool, false}};
    case ActionKind::Fold: return {{0, A::Foldable, false}};
    case ActionKind::Zip: return {{0, A::Zippable, false}};
    case ActionKind::Open: return {{0, A::Openable, false}};
    case ActionKind::Close: return {{0, A::Closable, false}};
    case ActionKind::TurnKnob: return {{0, A::Knob, false}};
    case ActionKind::ToggleSwitch: return {{0, A::Switch, false}};
    case ActionKind::TurnLever: return {{0, A::Lever, false}};
  }
  return {};
}

bool is_object(const SceneStatics& st, const std::string& name) { return st.affordances.count(name) > 0; }
bool is_region(const SceneStatics& st, const std::string& name) { return st.regions.count(name) > 0; }

bool object_has(const SceneStatics& st, const std::string& name, Affordance a) {
  auto it = st.affordances.find(name);
  return it != st.affordances.end() && it->second.count(a) > 0;
}

// Replays a plan, skipping steps whose preconditions fail.
std::pair<WorldState, int> lenient_replay(const WorldState& init, const Plan& plan) {
  WorldState s = init;
  int ok = 0;
  for (const auto& a : plan.actions) {
    if (!preconditions_hold(s, a)) continue;
    s = apply_effects(s, a);
    ++ok;
  }
  return {std::move(s), ok};
}

std::set<std::string> atom_delta(const WorldState& from, const WorldState& to) {
  const auto a = from.atoms();
  const auto b = to.atoms();
  std::set<std::string> d;
  for (const auto& x : b)
    if (!a.count(x)) d.insert("+" + x);
  for (const auto& x : a)
    if (!b.count(x)) d.insert("-" + x);
  return d;
}

double evidence_overlap(const Plan& cand, const PlannerContext& ctx) {
  const std::size_t n = cand.size();
  switch (ctx.level) {
    case ContextLevel::Planning: {
      const std::size_t m = ctx.task.size();
      const std::size_t denom = std::max(n, m);
      if (denom == 0) return 0.0;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < std::min(n, m); ++i) hits += cand.actions[i] == ctx.task.actions[i] ? 1 : 0;
      return static_cast<double>(hits) / static_cast<double>(denom);
    }
    case ContextLevel::Understanding: {
      if (!ctx.video) return 0.0;
      const Trajectory& v = *ctx.video;
      const std::size_t m = v.segments.size();
      const std::size_t denom = std::max(n, m);
      if (denom == 0) return 0.0;
      std::size_t hits = 0;
      for (std::size_t i = 0; i < std::min(n, m); ++i)
        hits += postcondition_holds(v.entry_state(i), v.exit_state(i), cand.actions[i]) ? 1 : 0;
      return static_cast<double>(hits) / static_cast<double>(denom);
    }
    case ContextLevel::Transition: {
      if (!ctx.final_frame) return 0.0;
      const auto observed = atom_delta(ctx.init, *ctx.final_frame);
      const auto predicted = atom_delta(ctx.init, lenient_replay(ctx.init, cand).first);
      std::size_t inter = 0;
      for (const auto& x : predicted) inter += observed.count(x);
      const std::size_t uni = observed.size() + predicted.size() - inter;
      return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
  }
  return 0.0;
}

std::vector<std::string> object_ids(const SceneStatics& st) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : st.affordances) ids.push_back(id);
  return ids;
}

}  // namespace

std::optional<std::size_t> CandidateSet::index_of(const Plan& p) const {
  for (std::size_t i = 0; i < plans.size(); ++i)
    if (plans[i] == p) return i;
  return std::nullopt;
}

bool affordance_compatible(const SceneStatics& st, const AtomicAction& a) {
  for (const auto& need : slot_needs(a.kind)) {
    if (need.slot >= a.args.size()) return false;
    const auto& name = a.args[need.slot];
    if (need.region_ok && is_region(st, name)) continue;
    if (!object_has(st, name, need.affordance)) return false;
  }
  if (a.kind == ActionKind::Sweep && (a.args.size() < 3 || !is_region(st, a.args[2]))) return false;
  return true;
}

int invalid_references(const SceneStatics& st, const AtomicAction& a) {
  int bad = 0;
  const std::size_t slots = std::min(reference_slots(a.kind), a.args.size());
  for (std::size_t i = 0; i < slots; ++i)
    if (!is_object(st, a.args[i]) && !is_region(st, a.args[i])) ++bad;
  if (!affordance_compatible(st, a)) ++bad;
  return bad;
}

PlanFeatures plan_features(const Plan& cand, const PlannerContext& ctx) {
  PlanFeatures f{};
  const double n = static_cast<double>(cand.size());
  if (cand.empty()) return f;
  const SceneStatics& st = *ctx.init.statics;
  f[0] = lenient_replay(ctx.init, cand).second / n;
  int compatible = 0;
  int invalid = 0;
  for (const auto& a : cand.actions) {
    compatible += affordance_compatible(st, a) ? 1 : 0;
    invalid += invalid_references(st, a);
  }
  f[1] = compatible / n;
  f[2] = evidence_overlap(cand, ctx);
  f[3] = -n;
  int redundant = 0;
  for (std::size_t i = 0; i < cand.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (cand.actions[i] == cand.actions[j]) {
        ++redundant;
        break;
      }
  f[4] = redundant;
  f[5] = invalid;
  return f;
}

std::vector<Plan> enumerate_candidates(const PlannerContext& ctx, std::size_t budget) {
  if (budget < 2) throw Error(ErrorCode::ConfigInvalid, "candidate budget must be at least 2");
  if (ctx.task.empty()) throw Error(ErrorCode::EmptyPlan, "planner context has an empty task");
  const Plan& truth = ctx.task;
  const std::size_t n = truth.size();
  const SceneStatics& st = *ctx.init.statics;
  const auto ids = object_ids(st);

  std::vector<std::vector<Plan>> groups(5);
  // reorder
  for (std::size_t i = 0; i + 1 < n; ++i) {
    Plan p = truth;
    std::swap(p.actions[i], p.actions[i + 1]);
    groups[0].push_back(std::move(p));
  }
  if (n > 2) {
    Plan p = truth;
    std::reverse(p.actions.begin(), p.actions.end());
    groups[0].push_back(std::move(p));
  }
  // clip
  for (std::size_t len = n; len-- > 1;) {
    Plan p;
    p.actions.assign(truth.actions.begin(), truth.actions.begin() + static_cast<std::ptrdiff_t>(len));
    groups[1].push_back(std::move(p));
  }
  if (n > 1) {
    Plan p;
    p.actions.assign(truth.actions.begin() + 1, truth.actions.end());
    groups[1].push_back(std::move(p));
  }
  // wrong object: compatible substitutes first, they make the harder negatives
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slot = target_slot(truth.actions[i].kind);
    std::vector<Plan> compat, other;
    for (const auto& id : ids) {
      if (id == truth.actions[i].args[slot]) continue;
      Plan p = truth;
      p.actions[i].args[slot] = id;
      (affordance_compatible(st, p.actions[i]) ? compat : other).push_back(std::move(p));
    }
    for (auto& p : compat) groups[2].push_back(std::move(p));
    for (auto& p : other) groups[2].push_back(std::move(p));
  }
  // affordance violation on the subject
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& id : ids) {
      Plan p = truth;
      p.actions[i].args[0] = id;
      if (!affordance_compatible(st, p.actions[i])) groups[3].push_back(std::move(p));
    }
  // redundancy
  {
    Plan p = truth;
    p.actions.push_back(truth.actions.back());
    groups[4].push_back(std::move(p));
  }

  std::set<std::string> seen = {truth.goal_text()};
  std::vector<Plan> out = {truth};
  std::vector<std::size_t> cursor(groups.size(), 0);
  bool progressed = true;
  while (out.size() < budget && progressed) {
    progressed = false;
    for (std::size_t g = 0; g < groups.size() && out.size() < budget; ++g) {
      while (cursor[g] < groups[g].size()) {
        Plan& p = groups[g][cursor[g]++];
        if (seen.insert(p.goal_text()).second) {
          out.push_back(std::move(p));
          progressed = true;
          break;
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Plan& a, const Plan& b) { return a.goal_text() < b.goal_text(); });
  return out;
}

CandidateSet build_candidate_set(const PlannerContext& ctx, std::size_t budget, std::span<const Plan> extra) {
  CandidateSet set;
  set.plans = enumerate_candidates(ctx, budget);
  for (const auto& p : extra)
    if (!p.empty() && !set.index_of(p)) set.plans.push_back(p);
  set.features.reserve(set.plans.size());
  for (const auto& p : set.plans) set.features.push_back(plan_features(p, ctx));
  return set;
}

std::vector<double> candidate_log_probabilities(const PlannerParams& params, const CandidateSet& set) {
  if (set.plans.empty()) throw Error(ErrorCode::EmptyCandidateSet, "no candidate plans");
  if (!(params.temperature > 0.0)) throw Error(ErrorCode::ConfigInvalid, "planner temperature must be positive");
  std::vector<double> scores(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < kPlanFeatureCount; ++d) s += params.weights[d] * set.features[i][d];
    scores[i] = s / params.temperature;
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  const double lz = mx + std::log(z);
  for (double& s : scores) s -= lz;
  return scores;
}

double plan_logprob(const PlannerParams& params, const CandidateSet& set, std::size_t index) {
  return candidate_log_probabilities(params, set).at(index);
}

double plan_logprob_grad(const PlannerParams& params, const CandidateSet& set, std::size_t index,
                         std::span<double> grad) {
  const auto lp = candidate_log_probabilities(params, set);
  std::array<double, kPlanFeatureCount> expected{};
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double p = std::exp(lp[i]);
    for (std::size_t d = 0; d < kPlanFeatureCount; ++d) expected[d] += p * set.features[i][d];
  }
  for (std::size_t d = 0; d < kPlanFeatureCount; ++d)
    grad[d] += (set.features.at(index)[d] - expected[d]) / params.temperature;
  return lp[index];
}

std::vector<PlanSample> sample_plans(const PlannerParams& params, const CandidateSet& set, std::size_t k, Rng& rng) {
  if (set.plans.empty()) throw Error(ErrorCode::EmptyCandidateSet, "no candidate plans");
  if (k < 2) throw Error(ErrorCode::GroupTooSmall, "planner group size must be at least 2");
  const auto lp = candidate_log_probabilities(params, set);
  std::vector<PlanSample> out;
  out.reserve(k);
  for (std::size_t s = 0; s < k; ++s) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = set.size() - 1;
    for (std::size_t i = 0; i < set.size(); ++i) {
      acc += std::exp(lp[i]);
      if (u < acc) {
        pick = i;
        break;
      }
    }
    out.push_back({set.plans[pick], lp[pick], pick});
  }
  return out;
}

VoteResult consensus_vote(std::span<const PlanSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyCandidateSet, "no samples to vote over");
  struct Tally {
    const Plan* plan;
    std::size_t count = 0;
    double logprob_sum = 0.0;
  };
  std::map<std::string, Tally> tally;
  for (const auto& s : samples) {
    auto [it, _] = tally.try_emplace(s.plan.goal_text(), Tally{&s.plan});
    ++it->second.count;
    it->second.logprob_sum += s.logprob;
  }
  std::vector<std::pair<std::string, Tally>> ranked(tally.begin(), tally.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    const double ma = a.second.logprob_sum / static_cast<double>(a.second.count);
    const double mb = b.second.logprob_sum / static_cast<double>(b.second.count);
    if (ma != mb) return ma > mb;
    return a.first < b.first;
  });
  VoteResult r{*ranked[0].second.plan, std::nullopt};
  if (ranked.size() > 1) r.runner_up = *ranked[1].second.plan;
  return r;
}

nlohmann::json planner_params_to_json(const PlannerParams& p) {
  return {{"weights", p.weights}, {"temperature", p.temperature}};
}

PlannerParams planner_params_from_json(const nlohmann::json& j) {
  PlannerParams p;
  const auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != kPlanFeatureCount) throw Error(ErrorCode::SchemaViolation, "planner weights must have 6 entries");
  std::copy(w.begin(), w.end(), p.weights.begin());
  p.temperature = j.value("temperature", 1.0);
  if (!(p.temperature > 0.0)) throw Error(ErrorCode::SchemaViolation, "planner temperature must be positive");
  return p;
}

}  // namespace roboevolve
