#include "roboevolve/scene.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>

#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

constexpr std::array<std::string_view, kAffordanceCount> kAffordanceNames = {
    "pickable", "placeable-target", "pushable", "stackable", "wipeable-surface",
    "foldable", "zippable",         "openable", "closable",  "knob",
    "switch",   "lever",            "tool"};

constexpr std::array<std::string_view, 7> kRelationNames = {
    "on", "in", "near", "left_of", "right_of", "behind", "front_of"};

using A = Affordance;

}  // namespace

std::string_view to_string(Affordance a) { return kAffordanceNames[static_cast<std::size_t>(a)]; }

std::optional<Affordance> affordance_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kAffordanceNames.size(); ++i)
    if (kAffordanceNames[i] == s) return static_cast<Affordance>(i);
  return std::nullopt;
}

std::string_view to_string(RelationKind k) { return kRelationNames[static_cast<std::size_t>(k)]; }

std::optional<RelationKind> relation_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i)
    if (kRelationNames[i] == s) return static_cast<RelationKind>(i);
  return std::nullopt;
}

int chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

const ObjectEntity* Scene::find_object(std::string_view id) const {
  auto it = std::lower_bound(objects.begin(), objects.end(), id,
                             [](const ObjectEntity& o, std::string_view v) { return o.id < v; });
  if (it != objects.end() && it->id == id) return &*it;
  // fall back to a scan for scenes that were never normalized
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const Region* Scene::find_region(std::string_view name) const {
  for (const auto& r : regions)
    if (r.name == name) return &r;
  return nullptr;
}

void Scene::normalize() {
  std::sort(objects.begin(), objects.end(),
            [](const ObjectEntity& a, const ObjectEntity& b) { return a.id < b.id; });
  std::sort(relations.begin(), relations.end());
  relations.erase(std::unique(relations.begin(), relations.end()), relations.end());
  std::sort(regions.begin(), regions.end(),
            [](const Region& a, const Region& b) { return a.name < b.name; });
}

const std::map<std::string, CategoryInfo>& category_table() {
  static const std::map<std::string, CategoryInfo> table = [] {
    std::map<std::string, CategoryInfo> t;
    auto add = [&](std::string name, AffordanceSet aff, std::optional<std::string> def = std::nullopt,
                   std::vector<std::string> states = {}) {
      t.emplace(std::move(name), CategoryInfo{std::move(aff), std::move(def), std::move(states)});
    };
    add("apple", {A::Pickable});
    add("banana", {A::Pickable});
    add("carrot", {A::Pickable});
    add("spoon", {A::Pickable});
    add("cup", {A::Pickable, A::Stackable});
    add("block", {A::Pickable, A::Stackable});
    add("can", {A::Pickable, A::PlaceableTarget});
    add("ball", {A::Pickable, A::Pushable});
    add("bowl", {A::Pickable, A::PlaceableTarget});
    add("plate", {A::PlaceableTarget});
    add("tray", {A::PlaceableTarget, A::Pushable, A::WipeableSurface}, "dirty", {"dirty", "clean"});
    add("counter", {A::WipeableSurface}, "dirty", {"dirty", "clean"});
    add("drawer", {A::Openable, A::Closable, A::PlaceableTarget}, "closed", {"open", "closed"});
    add("box", {A::Openable, A::Closable, A::PlaceableTarget, A::Pushable}, "closed",
        {"open", "closed"});
    add("towel", {A::Pickable, A::Foldable, A::Tool}, "flat", {"flat", "folded"});
    add("cloth", {A::Pickable, A::Foldable}, "flat", {"flat", "folded"});
    add("sponge", {A::Pickable, A::Tool});
    add("brush", {A::Pickable, A::Tool});
    add("crumbs", {A::Pushable});
    add("bag", {A::Pickable, A::Zippable}, "unzipped", {"zipped", "unzipped"});
    add("stove_knob", {A::Knob}, "0", {"0", "90", "180"});
    add("light_switch", {A::Switch}, "off", {"on", "off"});
    add("faucet_lever", {A::Lever}, "down", {"up", "down"});
    return t;
  }();
  return table;
}

void validate_scene(const Scene& scene) {
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::SchemaViolation, "scene '" + scene.scene_id + "': " + msg);
  };
  if (scene.scene_id.empty()) fail("empty scene_id");
  if (scene.grid.width <= 0 || scene.grid.height <= 0) fail("non-positive grid size");

  std::map<std::string, const ObjectEntity*> ids;
  const auto& table = category_table();
  for (const auto& o : scene.objects) {
    if (o.id.empty()) fail("object with empty id");
    if (!ids.emplace(o.id, &o).second) fail("duplicate object id '" + o.id + "'");
    auto cat = table.find(o.category);
    if (cat == table.end()) fail("object '" + o.id + "' has unknown category '" + o.category + "'");
    for (auto a : o.affordances)
      if (!cat->second.affordances.count(a))
        fail("object '" + o.id + "' affordance '" + std::string(to_string(a)) +
             "' not admissible for category '" + o.category + "'");
    if (!scene.grid.contains(o.position)) fail("object '" + o.id + "' outside grid");
    if (o.state) {
      const auto& st = cat->second.states;
      if (std::find(st.begin(), st.end(), *o.state) == st.end())
        fail("object '" + o.id + "' has inadmissible state '" + *o.state + "'");
    }
  }

  std::map<std::string, std::vector<std::string>> parent;  // on/in edges
  for (const auto& r : scene.relations) {
    if (!ids.count(r.subject) || !ids.count(r.object))
      fail("relation references unknown object (" + r.subject + ", " + r.object + ")");
    if (r.subject == r.object) fail("relation with subject == object '" + r.subject + "'");
    if (r.kind == RelationKind::On || r.kind == RelationKind::In) parent[r.subject].push_back(r.object);
  }
  // on/in acyclicity
  std::map<std::string, int> color;
  std::function<void(const std::string&)> dfs = [&](const std::string& v) {
    color[v] = 1;
    for (const auto& w : parent[v]) {
      if (color[w] == 1) fail("on/in relations form a cycle through '" + w + "'");
      if (color[w] == 0) dfs(w);
    }
    color[v] = 2;
  };
  for (const auto& [id, _] : ids)
    if (color[id] == 0) dfs(id);

  for (const auto& o : scene.objects) {
    if (!o.containment) continue;
    const auto& ps = parent[o.id];
    if (std::find(ps.begin(), ps.end(), *o.containment) == ps.end())
      fail("object '" + o.id + "' containment '" + *o.containment + "' lacks an on/in relation");
    if (ids.at(*o.containment)->position != o.position)
      fail("object '" + o.id + "' not co-located with its container");
  }

  std::set<std::string> region_names;
  for (const auto& reg : scene.regions) {
    if (!region_names.insert(reg.name).second) fail("duplicate region '" + reg.name + "'");
    if (ids.count(reg.name)) fail("region name '" + reg.name + "' collides with an object id");
    if (!scene.grid.contains(reg.cell)) fail("region '" + reg.name + "' outside grid");
    for (const auto& o : scene.objects)
      if (o.position == reg.cell) fail("object '" + o.id + "' occupies free region '" + reg.name + "'");
  }
}

nlohmann::json scene_to_json(const Scene& scene) {
  using nlohmann::json;
  json objs = json::array();
  for (const auto& o : scene.objects) {
    json aff = json::array();
    for (auto a : o.affordances) aff.push_back(std::string(to_string(a)));
    json jo = {{"id", o.id},
               {"category", o.category},
               {"affordances", aff},
               {"position", {o.position.x, o.position.y}}};
    jo["containment"] = o.containment ? json(*o.containment) : json(nullptr);
    jo["state"] = o.state ? json(*o.state) : json(nullptr);
    objs.push_back(std::move(jo));
  }
  json rels = json::array();
  for (const auto& r : scene.relations)
    rels.push_back({{"subject", r.subject}, {"kind", std::string(to_string(r.kind))}, {"object", r.object}});
  json regs = json::array();
  for (const auto& r : scene.regions) regs.push_back({{"name", r.name}, {"cell", {r.cell.x, r.cell.y}}});
  return {{"schema", std::string(kSceneSchema)},
          {"scene_id", scene.scene_id},
          {"grid", {{"width", scene.grid.width}, {"height", scene.grid.height}}},
          {"objects", objs},
          {"relations", rels},
          {"regions", regs}};
}

namespace {

Cell cell_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw Error(ErrorCode::SchemaViolation, where + ": cell must be [x, y] integers");
  return {j[0].get<int>(), j[1].get<int>()};
}

const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::SchemaViolation, where + ": missing field '" + key + "'");
  return j.at(key);
}

std::string require_string(const nlohmann::json& j, const char* key, const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_string()) throw Error(ErrorCode::SchemaViolation, where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

Scene scene_from_json(const nlohmann::json& j) {
  if (require_string(j, "schema", "scene") != kSceneSchema)
    throw Error(ErrorCode::SchemaViolation, "scene: schema must be '" + std::string(kSceneSchema) + "'");
  Scene s;
  s.scene_id = require_string(j, "scene_id", "scene");
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    s.grid.width = require(g, "width", "grid").get<int>();
    s.grid.height = require(g, "height", "grid").get<int>();
  }
  for (const auto& jo : require(j, "objects", "scene")) {
    ObjectEntity o;
    o.id = require_string(jo, "id", "object");
    const std::string where = "object '" + o.id + "'";
    o.category = require_string(jo, "category", where);
    for (const auto& a : require(jo, "affordances", where)) {
      auto parsed = affordance_from_string(a.get<std::string>());
      if (!parsed) throw Error(ErrorCode::SchemaViolation, where + ": unknown affordance " + a.dump());
      o.affordances.insert(*parsed);
    }
    o.position = cell_from_json(require(jo, "position", where), where);
    if (jo.contains("containment") && !jo.at("containment").is_null())
      o.containment = jo.at("containment").get<std::string>();
    if (jo.contains("state") && !jo.at("state").is_null()) o.state = jo.at("state").get<std::string>();
    s.objects.push_back(std::move(o));
  }
  if (j.contains("relations")) {
    for (const auto& jr : j.at("relations")) {
      Relation r;
      r.subject = require_string(jr, "subject", "relation");
      r.object = require_string(jr, "object", "relation");
      auto k = relation_kind_from_string(require_string(jr, "kind", "relation"));
      if (!k) throw Error(ErrorCode::SchemaViolation, "relation: unknown kind " + jr.at("kind").dump());
      r.kind = *k;
      s.relations.push_back(std::move(r));
    }
  }
  if (j.contains("regions")) {
    for (const auto& jr : j.at("regions")) {
      Region r;
      r.name = require_string(jr, "name", "region");
      r.cell = cell_from_json(require(jr, "cell", "region '" + r.name + "'"), "region '" + r.name + "'");
      s.regions.push_back(std::move(r));
    }
  }
  s.normalize();
  return s;
}

}  // namespace roboevolve
