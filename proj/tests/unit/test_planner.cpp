#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "roboevolve/error.hpp"
#include "roboevolve/mining.hpp"
#include "roboevolve/planner.hpp"
#include "roboevolve/scenegraph.hpp"

using namespace roboevolve;

namespace {

Plan plan_of(std::string_view text) { return *parse_goal_text(text); }

PlannerContext kitchen_ctx(std::string_view goal) {
  const Scene s = fixtures::kitchen();
  return planning_context(s.scene_id, initial_state(s), plan_of(goal));
}

std::vector<PlanSample> votes(std::initializer_list<std::pair<const char*, int>> counts,
                              std::initializer_list<double> mean_logprob = {}) {
  std::vector<PlanSample> out;
  auto lp = mean_logprob.begin();
  for (const auto& [goal, n] : counts) {
    const double l = lp != mean_logprob.end() ? *lp++ : -1.0;
    for (int i = 0; i < n; ++i) out.push_back({plan_of(goal), l, 0});
  }
  return out;
}

}  // namespace

TEST_CASE("budget two keeps the truth and one corruption") {
  const auto ctx = kitchen_ctx("pick(cup)");
  const auto c = enumerate_candidates(ctx, 2);
  REQUIRE(c.size() == 2);
  CHECK(std::count(c.begin(), c.end(), ctx.task) == 1);
  CHECK(std::is_sorted(c.begin(), c.end(),
                       [](const Plan& a, const Plan& b) { return a.goal_text() < b.goal_text(); }));
  CHECK_THROWS_AS(enumerate_candidates(ctx, 1), Error);
}

TEST_CASE("ground truth is always a candidate") {
  const Scene s = fixtures::kitchen();
  const auto repo = instantiate_tasks(s, 3);
  int checked = 0;
  for (const auto& [_, tasks] : repo.bins)
    for (std::size_t i = 0; i < tasks.size() && checked < 100; i += 2, ++checked) {
      const auto ctx = planning_context(s.scene_id, initial_state(s), tasks[i].plan);
      const auto c = enumerate_candidates(ctx);
      CHECK(std::find(c.begin(), c.end(), ctx.task) != c.end());
      CHECK(c.size() <= kDefaultCandidateBudget);
    }
  CHECK(checked == 100);
}

TEST_CASE("affordance-violating candidates carry invalid references") {
  const auto ctx = kitchen_ctx("open(drawer);pick(apple)");
  const auto set = build_candidate_set(ctx);
  bool found = false;
  for (std::size_t i = 0; i < set.size(); ++i) {
    bool violates = false;
    for (const auto& a : set.plans[i].actions) violates |= !affordance_compatible(*ctx.init.statics, a);
    if (violates) {
      found = true;
      CHECK(set.features[i][5] > 0.0);
    }
  }
  CHECK(found);
}

TEST_CASE("zero weights sample uniformly") {
  const auto set = build_candidate_set(kitchen_ctx("open(drawer);pick(apple)"));
  PlannerParams zero;
  zero.weights = {};
  for (double lp : candidate_log_probabilities(zero, set))
    CHECK(lp == doctest::Approx(-std::log(static_cast<double>(set.size()))));
  Rng rng(1);
  for (const auto& s : sample_plans(zero, set, 16, rng))
    CHECK(s.logprob == doctest::Approx(-std::log(static_cast<double>(set.size()))));
}

TEST_CASE("a strong precondition weight samples the ground truth") {
  PlannerParams p;
  p.weights = {20.0, 0, 0, 0, 0, 0};
  auto frequency = [&](const PlannerContext& ctx, auto&& accept) {
    const auto set = build_candidate_set(ctx);
    Rng rng(2);
    const auto draws = sample_plans(p, set, 10000, rng);
    return std::count_if(draws.begin(), draws.end(), accept) / 10000.0;
  };

  const auto single = kitchen_ctx("open(drawer)");
  CHECK(frequency(single, [&](const PlanSample& s) { return s.plan == single.task; }) >= 0.95);

  // Clipped prefixes replay cleanly and tie with the truth on this feature.
  const auto multi = kitchen_ctx("open(drawer);pick(apple);place(apple,bowl)");
  const auto& goal = multi.task.actions;
  CHECK(frequency(multi, [&](const PlanSample& s) {
          const auto& a = s.plan.actions;
          return a.size() <= goal.size() && std::equal(a.begin(), a.end(), goal.begin());
        }) >= 0.95);
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  const auto set = build_candidate_set(kitchen_ctx("pick(cup);place(cup,bowl)"));
  Rng a(77), b(77);
  const auto x = sample_plans(PlannerParams{}, set, 16, a);
  const auto y = sample_plans(PlannerParams{}, set, 16, b);
  REQUIRE(x.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(x[i].plan == y[i].plan);
    CHECK(x[i].logprob == y[i].logprob);
  }
  Rng c(77);
  CHECK_THROWS_AS(sample_plans(PlannerParams{}, CandidateSet{}, 16, c), Error);
}

TEST_CASE("candidate probabilities normalize and the argmax ignores temperature") {
  const auto set = build_candidate_set(kitchen_ctx("open(drawer);pick(apple);place(apple,bowl)"));
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    PlannerParams p;
    for (auto& w : p.weights) w = 6.0 * rng.uniform() - 3.0;
    const auto lp = candidate_log_probabilities(p, set);
    double total = 0.0;
    for (double x : lp) total += std::exp(x);
    CHECK(std::abs(total - 1.0) <= 1e-12);
    const auto best = std::max_element(lp.begin(), lp.end()) - lp.begin();
    for (double t : {0.1, 0.5, 3.0, 20.0}) {
      p.temperature = t;
      const auto lt = candidate_log_probabilities(p, set);
      CHECK(std::max_element(lt.begin(), lt.end()) - lt.begin() == best);
    }
  }
}

TEST_CASE("consensus vote picks the mode and the runner-up") {
  const auto unanimous = votes({{"pick(cup)", 16}});
  const auto u = consensus_vote(unanimous);
  CHECK(u.consensus == plan_of("pick(cup)"));
  CHECK_FALSE(u.runner_up);

  const auto r = consensus_vote(votes({{"pick(bowl)", 5}, {"pick(cup)", 9}, {"pick(sponge)", 2}}));
  CHECK(r.consensus == plan_of("pick(cup)"));
  CHECK(r.runner_up == plan_of("pick(bowl)"));
}

TEST_CASE("vote ties break on mean log-probability, then goal text") {
  const auto t = consensus_vote(votes({{"pick(bowl)", 8}, {"pick(cup)", 8}}, {-2.0, -1.0}));
  CHECK(t.consensus == plan_of("pick(cup)"));
  CHECK(t.runner_up == plan_of("pick(bowl)"));
  const auto lex = consensus_vote(votes({{"pick(cup)", 8}, {"pick(bowl)", 8}}, {-1.0, -1.0}));
  CHECK(lex.consensus == plan_of("pick(bowl)"));
}

TEST_CASE("vote is invariant to sample order") {
  auto samples = votes({{"pick(bowl)", 5}, {"pick(cup)", 5}, {"pick(sponge)", 6}}, {-1.0, -0.5, -3.0});
  const auto ref = consensus_vote(samples);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    for (std::size_t i = samples.size() - 1; i > 0; --i) std::swap(samples[i], samples[rng.below(i + 1)]);
    const auto v = consensus_vote(samples);
    CHECK(v.consensus == ref.consensus);
    CHECK(v.runner_up == ref.runner_up);
  }
}

TEST_CASE("clipped corruptions never beat the truth on precondition satisfaction") {
  const Scene s = fixtures::kitchen();
  const auto repo = instantiate_tasks(s, 3);
  for (const auto& [_, tasks] : repo.bins)
    for (const auto& task : tasks) {
      const auto ctx = planning_context(s.scene_id, initial_state(s), task.plan);
      const auto set = build_candidate_set(ctx);
      const auto truth = set.index_of(task.plan);
      REQUIRE(truth);
      for (std::size_t i = 0; i < set.size(); ++i)
        if (set.plans[i].size() < task.plan.size() &&
            std::equal(set.plans[i].actions.begin(), set.plans[i].actions.end(), task.plan.actions.begin()))
          CHECK(set.features[*truth][0] >= set.features[i][0]);
    }
}

TEST_CASE("planner parameters round-trip through JSON") {
  PlannerParams p;
  p.weights = {0.1, -0.2, 0.3, 1e-17, 5.5, -6.25};
  p.temperature = 0.7;
  CHECK(planner_params_from_json(planner_params_to_json(p)) == p);
}
