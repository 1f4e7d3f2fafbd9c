#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roboevolve/scene.hpp"
#include "roboevolve/world.hpp"
#include "roboevolve/world_state.hpp"

namespace fixtures {

using namespace roboevolve;

inline ObjectEntity object(const std::string& id, const std::string& category, int x, int y,
                           std::optional<std::string> containment = std::nullopt,
                           std::optional<std::string> state = std::nullopt) {
  const auto& info = category_table().at(category);
  ObjectEntity o;
  o.id = id;
  o.category = category;
  o.affordances = info.affordances;
  o.position = {x, y};
  o.containment = std::move(containment);
  o.state = state ? state : info.default_state;
  return o;
}

// Closed drawer holding an apple, a cup and a bowl on the floor, a dirty
// counter with a sponge, and a stove knob.
inline Scene kitchen() {
  Scene s;
  s.scene_id = "kitchen";
  s.objects = {object("drawer", "drawer", 1, 1),
               object("apple", "apple", 1, 1, "drawer"),
               object("cup", "cup", 3, 3),
               object("bowl", "bowl", 5, 5),
               object("counter", "counter", 0, 6),
               object("sponge", "sponge", 6, 0),
               object("knob", "stove_knob", 6, 6)};
  s.relations = {{"apple", RelationKind::In, "drawer"}, {"cup", RelationKind::Near, "bowl"}};
  s.regions = {{"shelf", {3, 0}}};
  s.normalize();
  return s;
}

// A tabletop with a pushable ball and crumbs, a tray, a towel and a bag.
inline Scene tabletop() {
  Scene s;
  s.scene_id = "tabletop";
  s.objects = {object("ball", "ball", 2, 2),   object("crumbs", "crumbs", 4, 2), object("tray", "tray", 0, 0),
               object("towel", "towel", 6, 3), object("bag", "bag", 3, 5),       object("block", "block", 5, 0)};
  s.regions = {{"bin_area", {6, 6}}};
  s.normalize();
  return s;
}

// Twelve objects covering every action kind.
inline Scene twelve_objects() {
  Scene s;
  s.scene_id = "twelve";
  s.objects = {object("apple", "apple", 0, 0),         object("cup", "cup", 1, 0),
               object("block", "block", 2, 0),         object("plate", "plate", 3, 0),
               object("box", "box", 4, 0),             object("towel", "towel", 5, 0),
               object("brush", "brush", 6, 0),         object("crumbs", "crumbs", 3, 3),
               object("bag", "bag", 0, 6),             object("knob", "stove_knob", 2, 6),
               object("switch", "light_switch", 4, 6), object("lever", "faucet_lever", 6, 6)};
  s.regions = {{"corner", {6, 3}}};
  s.normalize();
  return s;
}

// Rollout with the outcome modes fixed instead of sampled; log-prob terms use
// uniform logits.
inline Trajectory forced(const Plan& plan, const WorldState& init, const std::vector<OutcomeMode>& modes,
                         std::uint64_t seed = 0) {
  Rng rng = Rng::substream(seed, StreamTag::Test, {99});
  Trajectory t;
  t.plan = plan;
  t.frames.push_back({0, init});
  WorldState current = init;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    auto out = apply_action(current, plan.actions[i], modes[i], rng);
    const std::size_t first = t.frames.size();
    for (auto& f : out.frames) t.frames.push_back({t.frames.size(), std::move(f)});
    t.segments.emplace_back(first, t.frames.size() - 1);
    t.modes.push_back(modes[i]);
    t.logprob_terms.push_back(std::log(0.2));
    current = std::move(out.next);
  }
  return t;
}

}  // namespace fixtures
