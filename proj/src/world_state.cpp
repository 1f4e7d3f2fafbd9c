#include "roboevolve/world_state.hpp"

#include <algorithm>

namespace roboevolve {

namespace {

const std::vector<std::string> kKnobAngles = {"0", "180", "90"};
const std::vector<std::string> kSwitchStates = {"off", "on"};
const std::vector<std::string> kLeverStates = {"down", "up"};
const std::vector<std::string> kZipDirections = {"unzip", "zip"};

bool contains(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::string zip_target_state(const std::string& dir) { return dir == "zip" ? "zipped" : "unzipped"; }

void detach(WorldState& s, const std::string& id) {
  for (auto it = s.on.begin(); it != s.on.end();) it = it->first == id ? s.on.erase(it) : std::next(it);
  for (auto it = s.in.begin(); it != s.in.end();) it = it->first == id ? s.in.erase(it) : std::next(it);
}

}  // namespace

bool WorldState::has(const std::string& id, Affordance a) const {
  auto it = statics->affordances.find(id);
  return it != statics->affordances.end() && it->second.count(a) > 0;
}

bool WorldState::contained(const std::string& id) const {
  for (const auto& [a, b] : on)
    if (a == id) return true;
  for (const auto& [a, b] : in)
    if (a == id) return true;
  return false;
}

bool WorldState::supports_something(const std::string& id) const {
  for (const auto& [a, b] : on)
    if (b == id) return true;
  for (const auto& [a, b] : in)
    if (b == id) return true;
  return false;
}

std::optional<Cell> WorldState::cell_of(const std::string& name) const {
  if (auto it = positions.find(name); it != positions.end()) return it->second;
  if (auto it = statics->regions.find(name); it != statics->regions.end()) return it->second;
  return std::nullopt;
}

bool WorldState::cell_free(Cell c, const std::string& ignore) const {
  for (const auto& [id, pos] : positions) {
    if (pos != c || id == ignore) continue;
    if (holding && *holding == id) continue;
    return false;
  }
  return true;
}

std::string WorldState::state_of(const std::string& id) const {
  auto it = device_state.find(id);
  return it == device_state.end() ? std::string() : it->second;
}

std::set<std::string> WorldState::atoms() const {
  std::set<std::string> out;
  for (const auto& [id, c] : positions)
    out.insert("at(" + id + "," + std::to_string(c.x) + "," + std::to_string(c.y) + ")");
  for (const auto& [a, b] : on) out.insert("on(" + a + "," + b + ")");
  for (const auto& [a, b] : in) out.insert("in(" + a + "," + b + ")");
  if (holding) out.insert("holding(" + *holding + ")");
  for (const auto& [id, v] : device_state) {
    if (!present(id)) continue;
    if (v == "open" || v == "closed")
      out.insert(v + "(" + id + ")");
    else
      out.insert("state(" + id + "," + v + ")");
  }
  return out;
}

WorldState initial_state(const Scene& scene) {
  auto statics = std::make_shared<SceneStatics>();
  statics->grid = scene.grid;
  WorldState s;
  for (const auto& o : scene.objects) {
    statics->affordances[o.id] = o.affordances;
    s.positions[o.id] = o.position;
    if (o.state) {
      s.device_state[o.id] = *o.state;
    } else if (auto cat = category_table().find(o.category);
               cat != category_table().end() && cat->second.default_state) {
      s.device_state[o.id] = *cat->second.default_state;
    }
  }
  for (const auto& r : scene.regions) statics->regions[r.name] = r.cell;
  for (const auto& r : scene.relations) {
    if (r.kind == RelationKind::On) s.on.emplace(r.subject, r.object);
    if (r.kind == RelationKind::In) s.in.emplace(r.subject, r.object);
  }
  s.statics = std::move(statics);
  return s;
}

std::optional<Cell> push_destination(Cell from, const std::string& direction) {
  if (direction == "east") return Cell{from.x + 1, from.y};
  if (direction == "west") return Cell{from.x - 1, from.y};
  if (direction == "north") return Cell{from.x, from.y - 1};
  if (direction == "south") return Cell{from.x, from.y + 1};
  return std::nullopt;
}

bool preconditions_hold(const WorldState& s, const AtomicAction& a) {
  if (a.args.size() != arity(a.kind)) return false;
  const std::string& x = a.args[0];
  if (!s.present(x)) return false;
  const bool hand_empty = !s.holding.has_value();
  const bool holding_x = s.holding && *s.holding == x;

  switch (a.kind) {
    case ActionKind::Pick: {
      if (!s.has(x, Affordance::Pickable) || !hand_empty || s.supports_something(x)) return false;
      for (const auto& [item, container] : s.in)
        if (item == x && s.state_of(container) != "open") return false;
      return true;
    }
    case ActionKind::Place: {
      const std::string& t = a.args[1];
      if (!holding_x || t == x) return false;
      if (s.statics->regions.count(t)) return s.cell_free(s.statics->regions.at(t), x);
      if (!s.present(t) || !s.has(t, Affordance::PlaceableTarget)) return false;
      if (s.has(t, Affordance::Openable)) return s.state_of(t) == "open";
      for (const auto& [upper, lower] : s.on)
        if (lower == t) return false;
      return true;
    }
    case ActionKind::Push: {
      if (!s.has(x, Affordance::Pushable) || holding_x || s.contained(x) || s.supports_something(x)) return false;
      auto dest = push_destination(s.positions.at(x), a.args[1]);
      return dest && s.statics->grid.contains(*dest) && s.cell_free(*dest);
    }
    case ActionKind::StackOn: {
      const std::string& y = a.args[1];
      if (!holding_x || y == x || !s.present(y)) return false;
      if (!s.has(x, Affordance::Stackable) || !s.has(y, Affordance::Stackable)) return false;
      return !s.supports_something(y);
    }
    case ActionKind::Wipe: {
      const std::string& tool = a.args[1];
      return s.has(x, Affordance::WipeableSurface) && s.state_of(x) == "dirty" && s.holding &&
             *s.holding == tool && s.has(tool, Affordance::Tool);
    }
    case ActionKind::Sweep: {
      const std::string& tool = a.args[1];
      const std::string& region = a.args[2];
      if (!s.has(x, Affordance::Pushable) || s.contained(x) || s.supports_something(x)) return false;
      if (!s.holding || *s.holding != tool || tool == x || !s.has(tool, Affordance::Tool)) return false;
      auto it = s.statics->regions.find(region);
      return it != s.statics->regions.end() && s.cell_free(it->second, x) && s.positions.at(x) != it->second;
    }
    case ActionKind::Fold:
      return s.has(x, Affordance::Foldable) && s.state_of(x) == "flat";
    case ActionKind::Zip:
      return s.has(x, Affordance::Zippable) && contains(kZipDirections, a.args[1]) &&
             s.state_of(x) != zip_target_state(a.args[1]);
    case ActionKind::Open:
      return s.has(x, Affordance::Openable) && s.state_of(x) == "closed";
    case ActionKind::Close:
      return s.has(x, Affordance::Closable) && s.state_of(x) == "open";
    case ActionKind::TurnKnob:
      return s.has(x, Affordance::Knob) && contains(kKnobAngles, a.args[1]) && s.state_of(x) != a.args[1];
    case ActionKind::ToggleSwitch:
      return s.has(x, Affordance::Switch) && contains(kSwitchStates, a.args[1]) && s.state_of(x) != a.args[1];
    case ActionKind::TurnLever:
      return s.has(x, Affordance::Lever) && contains(kLeverStates, a.args[1]) && s.state_of(x) != a.args[1];
  }
  return false;
}

WorldState apply_effects(const WorldState& s, const AtomicAction& a) {
  WorldState n = s;
  const std::string& x = a.args[0];
  switch (a.kind) {
    case ActionKind::Pick:
      detach(n, x);
      n.holding = x;
      break;
    case ActionKind::Place: {
      const std::string& t = a.args[1];
      n.holding.reset();
      n.positions[x] = *s.cell_of(t);
      if (s.present(t)) {
        if (s.has(t, Affordance::Openable))
          n.in.emplace(x, t);
        else
          n.on.emplace(x, t);
      }
      break;
    }
    case ActionKind::Push:
      n.positions[x] = *push_destination(s.positions.at(x), a.args[1]);
      break;
    case ActionKind::StackOn:
      n.holding.reset();
      n.positions[x] = s.positions.at(a.args[1]);
      n.on.emplace(x, a.args[1]);
      break;
    case ActionKind::Wipe:
      n.device_state[x] = "clean";
      break;
    case ActionKind::Sweep:
      n.positions[x] = s.statics->regions.at(a.args[2]);
      break;
    case ActionKind::Fold:
      n.device_state[x] = "folded";
      break;
    case ActionKind::Zip:
      n.device_state[x] = zip_target_state(a.args[1]);
      break;
    case ActionKind::Open:
      n.device_state[x] = "open";
      break;
    case ActionKind::Close:
      n.device_state[x] = "closed";
      break;
    case ActionKind::TurnKnob:
    case ActionKind::ToggleSwitch:
    case ActionKind::TurnLever:
      n.device_state[x] = a.args[1];
      break;
  }
  return n;
}

bool postcondition_holds(const WorldState& pre, const WorldState& post, const AtomicAction& a) {
  if (a.args.size() != arity(a.kind)) return false;
  const std::string& x = a.args[0];
  if (!post.present(x)) return false;
  auto changed_to = [&](const std::string& id, const std::string& value) {
    return post.state_of(id) == value && pre.state_of(id) != value;
  };
  switch (a.kind) {
    case ActionKind::Pick:
      return post.holding == x && pre.holding != x;
    case ActionKind::Place: {
      const std::string& t = a.args[1];
      if (post.holding == x) return false;
      if (pre.statics->regions.count(t)) return post.positions.at(x) == pre.statics->regions.at(t) && !post.contained(x);
      if (!post.present(t)) return false;
      return post.on.count({x, t}) > 0 || post.in.count({x, t}) > 0;
    }
    case ActionKind::Push: {
      if (!pre.present(x)) return false;
      auto dest = push_destination(pre.positions.at(x), a.args[1]);
      return dest && post.positions.at(x) == *dest;
    }
    case ActionKind::StackOn:
      return post.present(a.args[1]) && post.on.count({x, a.args[1]}) > 0 && post.holding != x;
    case ActionKind::Wipe:
      return changed_to(x, "clean");
    case ActionKind::Sweep: {
      auto it = pre.statics->regions.find(a.args[2]);
      return pre.present(x) && it != pre.statics->regions.end() && post.positions.at(x) == it->second &&
             pre.positions.at(x) != it->second;
    }
    case ActionKind::Fold:
      return changed_to(x, "folded");
    case ActionKind::Zip:
      return changed_to(x, zip_target_state(a.args[1]));
    case ActionKind::Open:
      return changed_to(x, "open");
    case ActionKind::Close:
      return changed_to(x, "closed");
    case ActionKind::TurnKnob:
    case ActionKind::ToggleSwitch:
    case ActionKind::TurnLever:
      return changed_to(x, a.args[1]);
  }
  return false;
}

std::vector<AtomicAction> applicable_actions(const WorldState& s) {
  std::vector<std::string> objects;
  for (const auto& [id, _] : s.positions) objects.push_back(id);
  std::vector<std::string> regions;
  for (const auto& [name, _] : s.statics->regions) regions.push_back(name);
  std::vector<std::string> targets = objects;
  targets.insert(targets.end(), regions.begin(), regions.end());

  std::vector<AtomicAction> out;
  auto consider = [&](ActionKind k, std::vector<std::string> args) {
    AtomicAction a{k, std::move(args)};
    if (preconditions_hold(s, a)) out.push_back(std::move(a));
  };
  for (const auto& x : objects) {
    consider(ActionKind::Pick, {x});
    for (const auto& t : targets) consider(ActionKind::Place, {x, t});
    for (const auto& d : push_directions()) consider(ActionKind::Push, {x, d});
    for (const auto& y : objects) consider(ActionKind::StackOn, {x, y});
    for (const auto& tool : objects) {
      consider(ActionKind::Wipe, {x, tool});
      for (const auto& r : regions) consider(ActionKind::Sweep, {x, tool, r});
    }
    consider(ActionKind::Fold, {x});
    for (const auto& d : kZipDirections) consider(ActionKind::Zip, {x, d});
    consider(ActionKind::Open, {x});
    consider(ActionKind::Close, {x});
    for (const auto& v : kKnobAngles) consider(ActionKind::TurnKnob, {x, v});
    for (const auto& v : kSwitchStates) consider(ActionKind::ToggleSwitch, {x, v});
    for (const auto& v : kLeverStates) consider(ActionKind::TurnLever, {x, v});
  }
  std::sort(out.begin(), out.end(),
            [](const AtomicAction& a, const AtomicAction& b) { return a.clause() < b.clause(); });
  return out;
}

std::optional<WorldState> replay_faithful(const WorldState& init, const Plan& plan) {
  WorldState s = init;
  for (const auto& a : plan.actions) {
    if (!preconditions_hold(s, a)) return std::nullopt;
    s = apply_effects(s, a);
  }
  return s;
}

}  // namespace roboevolve
