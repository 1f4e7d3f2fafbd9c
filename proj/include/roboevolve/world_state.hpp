#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "roboevolve/action.hpp"
#include "roboevolve/scene.hpp"

namespace roboevolve {

// Scene facts that never change during execution.
struct SceneStatics {
  GridSize grid;
  std::map<std::string, AffordanceSet> affordances;
  std::map<std::string, Cell> regions;
};

// Symbolic world state. Positions double as the at(obj, cell) facts; an
// object that is absent from `positions` no longer exists in the scene.
struct WorldState {
  std::shared_ptr<const SceneStatics> statics;
  std::map<std::string, Cell> positions;
  std::set<std::pair<std::string, std::string>> on;  // (upper, lower)
  std::set<std::pair<std::string, std::string>> in;  // (item, container)
  std::optional<std::string> holding;
  std::map<std::string, std::string> device_state;  // open/closed, folded, on/off, angles...

  bool present(const std::string& id) const { return positions.count(id) > 0; }
  bool has(const std::string& id, Affordance a) const;
  bool contained(const std::string& id) const;  // on or in something
  bool supports_something(const std::string& id) const;
  std::optional<Cell> cell_of(const std::string& object_or_region) const;
  // True when no present object other than a held one sits on `c`.
  bool cell_free(Cell c, const std::string& ignore = {}) const;
  std::string state_of(const std::string& id) const;

  // Ground facts in canonical textual form.
  std::set<std::string> atoms() const;

  bool operator==(const WorldState& other) const {
    return positions == other.positions && on == other.on && in == other.in && holding == other.holding &&
           device_state == other.device_state;
  }
};

WorldState initial_state(const Scene& scene);

bool preconditions_hold(const WorldState& s, const AtomicAction& a);

// Applies the action's postconditions. Requires preconditions_hold(s, a).
WorldState apply_effects(const WorldState& s, const AtomicAction& a);

// Whether `post` exhibits the effect of `a` relative to `pre`.
bool postcondition_holds(const WorldState& pre, const WorldState& post, const AtomicAction& a);

// Every action whose preconditions hold in `s`, in lexicographic clause order.
std::vector<AtomicAction> applicable_actions(const WorldState& s);

// Replays `plan` faithfully; returns nullopt if some step's preconditions fail.
std::optional<WorldState> replay_faithful(const WorldState& init, const Plan& plan);

// Target cell of a push in the given direction word, if known.
std::optional<Cell> push_destination(Cell from, const std::string& direction);

inline const std::vector<std::string>& push_directions() {
  static const std::vector<std::string> d = {"east", "north", "south", "west"};
  return d;
}

}  // namespace roboevolve
