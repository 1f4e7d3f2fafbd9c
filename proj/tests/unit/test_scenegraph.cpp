#include <cmath>
#include <set>
#include <sstream>

#include "brute_force.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "roboevolve/error.hpp"
#include "roboevolve/rng.hpp"
#include "roboevolve/scenegraph.hpp"

using namespace roboevolve;

namespace {

Scene ten_pickables() {
  Scene s;
  s.scene_id = "ten";
  const char* cats[] = {"apple", "banana", "carrot", "spoon", "cup", "block", "can", "ball", "bowl", "sponge"};
  for (int i = 0; i < 10; ++i) s.objects.push_back(fixtures::object(std::string("o") + char('a' + i), cats[i], i % 7, i / 7));
  s.normalize();
  return s;
}

Plan plan_of(std::string_view text) {
  auto p = parse_goal_text(text);
  REQUIRE(p);
  return *p;
}

bool has_plan(const TaskRepository& repo, int bin, std::string_view goal) {
  auto it = repo.bins.find(bin);
  if (it == repo.bins.end()) return false;
  for (const auto& t : it->second)
    if (t.plan.goal_text() == goal) return true;
  return false;
}

}  // namespace

TEST_CASE("zero-noise parse reproduces the truth scene") {
  const Scene truth = fixtures::kitchen();
  Rng rng = Rng::substream(1, StreamTag::Test, {0});
  CHECK(parse_scene_noisy(truth, 0.0, 0.0, rng) == truth);
}

TEST_CASE("parse noise rates outside [0, 1) are rejected") {
  Rng rng(3);
  CHECK_THROWS_AS(parse_scene_noisy(fixtures::kitchen(), 1.0, 0.0, rng), Error);
  CHECK_THROWS_AS(parse_scene_noisy(fixtures::kitchen(), 0.1, -0.1, rng), Error);
}

TEST_CASE("object drop rate matches its expectation over 10k parses") {
  const Scene truth = ten_pickables();
  double survived = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(42, StreamTag::Test, {static_cast<std::uint64_t>(i)});
    const Scene p = parse_scene_noisy(truth, 0.2, 0.0, rng);
    for (const auto& o : p.objects) survived += truth.find_object(o.id) ? 1 : 0;
  }
  CHECK(survived / n == doctest::Approx(8.0).epsilon(0.0125));  // +-0.1
}

TEST_CASE("hallucinated object count matches the binomial expectation") {
  const Scene truth = ten_pickables();
  double ghosts = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(43, StreamTag::Test, {static_cast<std::uint64_t>(i)});
    const Scene p = parse_scene_noisy(truth, 0.0, 0.05, rng);
    for (const auto& o : p.objects) ghosts += truth.find_object(o.id) ? 0 : 1;
  }
  const double expected = 10 * 0.05;
  CHECK(std::abs(ghosts / n - expected) <= 0.05 * expected);
}

TEST_CASE("vote over identical parses is the identity") {
  const Scene s = fixtures::kitchen();
  CHECK(vote_scene(std::vector<Scene>(8, s), VotingConfig{}) == s);
  CHECK(vote_scene(std::vector<Scene>(5, s), VotingConfig{5}) == s);
}

TEST_CASE("strict majority boundary: 4 of 8 drops, 5 of 8 keeps") {
  const Scene full = fixtures::kitchen();
  Scene without_cup = full;
  std::erase_if(without_cup.objects, [](const ObjectEntity& o) { return o.id == "cup"; });
  std::erase_if(without_cup.relations, [](const Relation& r) { return r.subject == "cup" || r.object == "cup"; });

  std::vector<Scene> four(4, full);
  four.insert(four.end(), 4, without_cup);
  CHECK(vote_scene(four, VotingConfig{}).find_object("cup") == nullptr);

  std::vector<Scene> five(5, full);
  five.insert(five.end(), 3, without_cup);
  CHECK(vote_scene(five, VotingConfig{}).find_object("cup") != nullptr);
}

TEST_CASE("vote rejects an empty or mis-sized parse set") {
  try {
    vote_scene({}, VotingConfig{});
    FAIL("expected EmptyParseSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyParseSet);
  }
  CHECK_THROWS_AS(vote_scene(std::vector<Scene>(3, fixtures::kitchen()), VotingConfig{}), Error);
}

TEST_CASE("position disagreement resolves per coordinate, ties to the smallest") {
  Scene a = fixtures::tabletop(), b = a;
  for (auto& o : b.objects)
    if (o.id == "ball") o.position = {3, 2};
  std::vector<Scene> parses(4, a);
  parses.insert(parses.end(), 4, b);
  const Scene v = vote_scene(parses, VotingConfig{});
  CHECK(v.find_object("ball")->position == Cell{2, 2});
}

TEST_CASE("voting retention of a true entity matches the binomial oracle") {
  // P(Bin(8, 0.8) >= 5)
  double exact = 0;
  for (int k = 5; k <= 8; ++k) {
    double c = 1;
    for (int i = 0; i < k; ++i) c = c * (8 - i) / (i + 1);
    exact += c * std::pow(0.8, k) * std::pow(0.2, 8 - k);
  }
  CHECK(exact == doctest::Approx(0.9437).epsilon(1e-4));

  const Scene truth = ten_pickables();
  double kept = 0, total = 0;
  for (std::uint64_t scene = 0; scene < 1000; ++scene) {
    std::vector<Scene> parses;
    for (std::uint64_t v = 0; v < 8; ++v) {
      Rng rng = Rng::substream(7, StreamTag::Test, {scene, v});
      parses.push_back(parse_scene_noisy(truth, 0.2, 0.0, rng));
    }
    const Scene voted = vote_scene(parses, VotingConfig{});
    kept += static_cast<double>(voted.objects.size());
    total += static_cast<double>(truth.objects.size());
  }
  CHECK(std::abs(kept / total - exact) <= 0.02);
}

TEST_CASE("voting is monotone in supporting parses") {
  const Scene full = fixtures::kitchen();
  Scene without_cup = full;
  std::erase_if(without_cup.objects, [](const ObjectEntity& o) { return o.id == "cup"; });
  std::erase_if(without_cup.relations, [](const Relation& r) { return r.subject == "cup" || r.object == "cup"; });
  for (int with = 0; with < 8; ++with) {
    std::vector<Scene> parses(static_cast<std::size_t>(with), full);
    parses.insert(parses.end(), static_cast<std::size_t>(8 - with), without_cup);
    const bool before = vote_scene(parses, VotingConfig{}).find_object("cup") != nullptr;
    parses.back() = full;
    const bool after = vote_scene(parses, VotingConfig{}).find_object("cup") != nullptr;
    CHECK((!before || after));
  }
}

TEST_CASE("open-then-pick composite appears in bin 2") {
  const TaskRepository repo = instantiate_tasks(fixtures::kitchen(), 2);
  CHECK(has_plan(repo, 2, "open(drawer);pick(apple)"));
  CHECK_FALSE(has_plan(repo, 1, "pick(apple)"));  // the drawer is closed
  CHECK(difficulty_of(plan_of("open(drawer);pick(apple)")) == 2);
}

TEST_CASE("every instantiated plan replays faithfully and sits in its own bin") {
  for (const Scene& scene : {fixtures::kitchen(), fixtures::tabletop(), fixtures::twelve_objects()}) {
    const TaskRepository repo = instantiate_tasks(scene, 3);
    const WorldState init = initial_state(scene);
    for (const auto& [bin, tasks] : repo.bins)
      for (const auto& t : tasks) {
        CHECK(difficulty_of(t.plan) == bin);
        CHECK(replay_faithful(init, t.plan).has_value());
      }
    CHECK(repo.count(2) > repo.count(1));
    CHECK(repo.count(3) > repo.count(2));
  }
}

TEST_CASE("bin-2 count equals an exhaustive enumeration on a 12-object scene") {
  const Scene s = fixtures::twelve_objects();
  const TaskRepository repo = instantiate_tasks(s, 2);
  CHECK(repo.count(1) == brute::count_chains(s, 1, kDefaultChainBudget));
  CHECK(repo.count(2) == brute::count_chains(s, 2, kDefaultChainBudget));
  std::set<ActionKind> used;
  for (const auto& [_, tasks] : repo.bins)
    for (const auto& t : tasks)
      for (const auto& a : t.plan.actions) used.insert(a.kind);
  CHECK(repo.template_ids == used);
}

TEST_CASE("chain budget truncates deterministically") {
  const Scene s = fixtures::twelve_objects();
  const TaskRepository small = instantiate_tasks(s, 2, 10);
  const TaskRepository full = instantiate_tasks(s, 2);
  REQUIRE(small.count(2) == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(small.bins.at(2)[i] == full.bins.at(2)[i]);
}

TEST_CASE("a scene without any applicable template is unsatisfiable") {
  Scene s;
  s.scene_id = "bare";
  s.objects = {fixtures::object("plate", "plate", 2, 2)};
  try {
    instantiate_tasks(s, 2);
    FAIL("expected UnsatisfiableScene");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsatisfiableScene);
  }
}

TEST_CASE("difficulty is the action count") {
  CHECK(difficulty_of(plan_of("pick(cup)")) == 1);
  CHECK(difficulty_of(plan_of("open(drawer);pick(apple)")) == 2);
  Plan nine;
  for (int i = 0; i < 9; ++i) nine.actions.push_back(make_action(ActionKind::Fold, {"towel"}));
  CHECK(difficulty_of(nine) == 9);
  CHECK_THROWS_AS(difficulty_of(Plan{}), Error);
}

TEST_CASE("goal text round-trips bit-exactly") {
  const TaskRepository repo = instantiate_tasks(fixtures::twelve_objects(), 2);
  for (const auto& [_, tasks] : repo.bins)
    for (const auto& t : tasks) CHECK(plan_of(t.plan.goal_text()) == t.plan);
  CHECK_FALSE(parse_goal_text("pick(cup,plate)"));
  CHECK_FALSE(parse_goal_text("levitate(cup)"));
}

TEST_CASE("task repository JSON Lines round-trip") {
  const TaskRepository repo = instantiate_tasks(fixtures::kitchen(), 2);
  std::stringstream ss;
  write_repository_jsonl(repo, ss);
  const TaskRepository back = read_repository_jsonl(ss);
  CHECK(back.bins == repo.bins);
  CHECK(back.template_ids == repo.template_ids);

  std::stringstream bad("{\"scene_id\":\"k\",\"bin\":2,\"goal\":\"pick(cup)\"}\n");
  CHECK_THROWS_AS(read_repository_jsonl(bad), Error);
}

TEST_CASE("co-located objects without a support link are reported") {
  Scene s = fixtures::kitchen();
  CHECK(unlinked_colocations(s).empty());
  std::erase_if(s.relations, [](const Relation& r) { return r.kind == RelationKind::In; });
  for (auto& o : s.objects) o.containment.reset();
  const auto clash = unlinked_colocations(s);
  REQUIRE(clash.size() == 1);
  CHECK(clash.front() == std::pair<std::string, std::string>{"apple", "drawer"});
}
