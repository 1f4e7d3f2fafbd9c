#include "doctest.h"
#include "fixtures.hpp"
#include "roboevolve/mining.hpp"
#include "roboevolve/reward.hpp"
#include "roboevolve/scenegraph.hpp"

using namespace roboevolve;
using M = OutcomeMode;

namespace {

const Plan& task() {
  static const Plan p = *parse_goal_text("pick(cup);place(cup,bowl);turn_knob(knob,90)");
  return p;
}

Experience experience(const std::vector<std::vector<M>>& rollouts, const Plan& plan = task()) {
  const Scene s = fixtures::kitchen();
  Experience e;
  e.scene_id = s.scene_id;
  e.bin = static_cast<int>(plan.size());
  e.task = plan;
  for (const auto& modes : rollouts) {
    e.trajectories.push_back(fixtures::forced(plan, initial_state(s), modes));
    e.breakdowns.push_back(total_reward(plan, e.trajectories.back()));
  }
  return e;
}

PlanSample sample(std::string_view goal) { return {*parse_goal_text(goal), -1.0, 0}; }

}  // namespace

TEST_CASE("teleport rollouts reach the goal and so are not negatives") {
  const auto e = experience({{M::Faithful, M::Faithful, M::Faithful}, {M::Faithful, M::Faithful, M::Teleport}});
  CHECK(e.breakdowns[1].s_f == 0.0);
  CHECK(e.breakdowns[1].s_e == 1.0);
  CHECK_FALSE(is_negative(e.breakdowns[1]));
  CHECK(mine_video_pairs(std::vector<Experience>{e}).empty());
}

TEST_CASE("perfect and final-skip rollouts form a pair") {
  const auto e = experience({{M::Faithful, M::Faithful, M::Faithful}, {M::Faithful, M::Faithful, M::Skip}});
  CHECK(e.breakdowns[1].s_f == 1.0);
  CHECK(e.breakdowns[1].seg == doctest::Approx(2.0 / 3.0));
  const auto pairs = mine_video_pairs(std::vector<Experience>{e});
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].level == PairLevel::Video);
  CHECK(pairs[0].win_traj->modes == e.trajectories[0].modes);
  CHECK(pairs[0].lose_traj->modes == e.trajectories[1].modes);
}

TEST_CASE("no positives, no pairs") {
  const auto e = experience({{M::Skip, M::Skip, M::Skip}, {M::Vanish, M::Faithful, M::Faithful}});
  CHECK(mine_video_pairs(std::vector<Experience>{e}).empty());
}

TEST_CASE("mined video pairs respect the gates") {
  std::vector<Experience> store;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::vector<M>> r;
    for (int k = 0; k < 4; ++k) {
      std::vector<M> modes;
      for (int a = 0; a < 3; ++a) modes.push_back(static_cast<M>(rng.below(kModeCount)));
      r.push_back(modes);
    }
    store.push_back(experience(r));
  }
  for (const auto& p : mine_video_pairs(store)) {
    const auto w = total_reward(task(), *p.win_traj);
    const auto l = total_reward(task(), *p.lose_traj);
    CHECK(w.total == 3.0);
    CHECK(w.i_sem == 1.0);
    CHECK(l.s_e == 0.0);
    CHECK((l.s_f == 1.0 || l.seg == 1.0));
  }
}

TEST_CASE("planning pairs: unanimous single-action vote yields nothing") {
  const Plan one = *parse_goal_text("pick(cup)");
  auto e = experience({{M::Faithful}}, one);
  e.vote = VoteResult{one, std::nullopt};
  CHECK(build_planning_pairs(std::vector<Experience>{e}, 1).empty());
}

TEST_CASE("planning pairs: clip loser is a strict prefix") {
  auto e = experience({{M::Faithful, M::Faithful, M::Faithful}});
  e.vote = VoteResult{task(), std::nullopt};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pairs = build_planning_pairs(std::vector<Experience>{e}, seed);
    REQUIRE(pairs.size() == 1);
    const auto& loser = pairs[0].loser.actions;
    CHECK((loser.size() == 1 || loser.size() == 2));
    CHECK(std::equal(loser.begin(), loser.end(), task().actions.begin()));
    CHECK(pairs[0].winner == task());
  }
}

TEST_CASE("planning pairs: runner-up adds a second pair") {
  auto e = experience({{M::Faithful, M::Faithful, M::Faithful}});
  e.vote = VoteResult{task(), *parse_goal_text("pick(cup);place(cup,bowl);turn_knob(knob,180)")};
  const auto pairs = build_planning_pairs(std::vector<Experience>{e}, 0);
  CHECK(pairs.size() == 2);
  for (const auto& p : pairs) CHECK(p.level == PairLevel::Planning);
  CHECK(build_planning_pairs(std::vector<Experience>{e}, 5).front().loser ==
        build_planning_pairs(std::vector<Experience>{e}, 5).front().loser);
}

TEST_CASE("understanding and transition pairs need a runner-up") {
  auto e = experience({{M::Faithful, M::Faithful, M::Faithful}});
  e.vote = VoteResult{task(), std::nullopt};
  const std::vector<Experience> store{e};
  CHECK(build_understanding_pairs(store).empty());
  CHECK(build_transition_pairs(store).empty());
}

TEST_CASE("understanding and transition pairs from a positive rollout") {
  auto e = experience({{M::Faithful, M::Faithful, M::Skip}, {M::Faithful, M::Faithful, M::Faithful}});
  const Plan runner = *parse_goal_text("pick(cup);place(cup,bowl)");
  e.vote = VoteResult{task(), runner};
  const std::vector<Experience> store{e};

  const auto u = build_understanding_pairs(store);
  REQUIRE(u.size() == 1);
  CHECK(u[0].level == PairLevel::Understanding);
  CHECK(u[0].winner == task());
  CHECK(u[0].winner.goal_text() != u[0].loser.goal_text());
  REQUIRE(u[0].context->video);
  CHECK(u[0].context->video->modes == e.trajectories[1].modes);

  const auto t = build_transition_pairs(store);
  REQUIRE(t.size() == 1);
  CHECK(t[0].level == PairLevel::Transition);
  const auto& ctx = *t[0].context;
  REQUIRE(ctx.final_frame);
  CHECK_FALSE(ctx.init == *ctx.final_frame);
  CHECK(replay_faithful(ctx.init, t[0].winner) == *ctx.final_frame);
}

TEST_CASE("gate predicates") {
  RewardBreakdown b{1, 1, 1, 1, 3, ""};
  CHECK(is_positive(b));
  CHECK_FALSE(is_negative(b));
  b = {1, 0, 0.5, 0, 1.5, ""};
  CHECK_FALSE(is_negative(b));
  b = {1, 1, 0.5, 0, 1.5, ""};
  CHECK(is_negative(b));
  b = {0.5, 0, 1.0, 0, 0.5, ""};
  CHECK(is_negative(b));
}

TEST_CASE("pair JSON carries the level tag") {
  const auto e = experience({{M::Faithful, M::Faithful, M::Faithful}, {M::Faithful, M::Faithful, M::Skip}});
  const auto pairs = mine_video_pairs(std::vector<Experience>{e});
  CHECK(pair_to_json(pairs.at(0)).at("level") == "video");
}
