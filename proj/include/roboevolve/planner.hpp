#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "roboevolve/action.hpp"
#include "roboevolve/rng.hpp"
#include "roboevolve/world.hpp"
#include "roboevolve/world_state.hpp"

namespace roboevolve {

inline constexpr std::size_t kPlanFeatureCount = 6;
inline constexpr std::size_t kDefaultCandidateBudget = 16;

// What the planner conditions on. Planning contexts see the scene and the
// goal text; understanding contexts see a rollout; transition contexts see
// only the first and last frames.
enum class ContextLevel : std::uint8_t { Planning, Understanding, Transition };

struct PlannerContext {
  std::string scene_id;
  WorldState init;
  Plan task;
  int min_difficulty = 1;
  int max_difficulty = 1;
  ContextLevel level = ContextLevel::Planning;
  std::optional<Trajectory> video;        // Understanding
  std::optional<WorldState> final_frame;  // Transition
};

using PlanFeatures = std::array<double, kPlanFeatureCount>;

struct PlannerParams {
  std::array<double, kPlanFeatureCount> weights{1.0, 1.0, 1.0, 0.1, -0.5, -0.5};
  double temperature = 1.0;

  std::span<double> values() { return weights; }
  std::span<const double> values() const { return weights; }
  bool operator==(const PlannerParams&) const = default;
};

// Candidate plans for one context with their cached feature vectors.
struct CandidateSet {
  std::vector<Plan> plans;
  std::vector<PlanFeatures> features;

  std::size_t size() const { return plans.size(); }
  std::optional<std::size_t> index_of(const Plan& p) const;
};

struct PlanSample {
  Plan plan;
  double logprob = 0.0;
  std::size_t index = 0;
};

struct VoteResult {
  Plan consensus;
  std::optional<Plan> runner_up;
};

// Slot-level checks shared by the feature extractor and the candidate generator.
bool affordance_compatible(const SceneStatics& statics, const AtomicAction& a);
int invalid_references(const SceneStatics& statics, const AtomicAction& a);

PlanFeatures plan_features(const Plan& candidate, const PlannerContext& ctx);

std::vector<Plan> enumerate_candidates(const PlannerContext& ctx, std::size_t budget = kDefaultCandidateBudget);

// Builds the scored candidate list; `extra` plans are appended if missing so
// that preference pairs can always be scored.
CandidateSet build_candidate_set(const PlannerContext& ctx, std::size_t budget = kDefaultCandidateBudget,
                                 std::span<const Plan> extra = {});

std::vector<double> candidate_log_probabilities(const PlannerParams& params, const CandidateSet& set);

double plan_logprob(const PlannerParams& params, const CandidateSet& set, std::size_t index);
// Accumulates d logprob / d weights into grad (size kPlanFeatureCount).
double plan_logprob_grad(const PlannerParams& params, const CandidateSet& set, std::size_t index,
                         std::span<double> grad);

std::vector<PlanSample> sample_plans(const PlannerParams& params, const CandidateSet& set, std::size_t k, Rng& rng);

VoteResult consensus_vote(std::span<const PlanSample> samples);

nlohmann::json planner_params_to_json(const PlannerParams& p);
PlannerParams planner_params_from_json(const nlohmann::json& j);

}  // namespace roboevolve
