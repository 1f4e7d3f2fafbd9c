#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace roboevolve {

enum class Affordance : std::uint8_t {
  Pickable,
  PlaceableTarget,
  Pushable,
  Stackable,
  WipeableSurface,
  Foldable,
  Zippable,
  Openable,
  Closable,
  Knob,
  Switch,
  Lever,
  Tool,
};

inline constexpr std::size_t kAffordanceCount = 13;

std::string_view to_string(Affordance a);
std::optional<Affordance> affordance_from_string(std::string_view s);

using AffordanceSet = std::set<Affordance>;

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

// Chebyshev distance; the grid's notion of per-frame displacement.
int chebyshev(Cell a, Cell b);

struct GridSize {
  int width = 7;
  int height = 7;
  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  auto operator<=>(const GridSize&) const = default;
};

struct ObjectEntity {
  std::string id;
  std::string category;
  AffordanceSet affordances;
  Cell position;
  std::optional<std::string> containment;
  // Articulated or deformable state ("open", "closed", "flat", "on", "90", ...).
  std::optional<std::string> state;
  auto operator<=>(const ObjectEntity&) const = default;
};

enum class RelationKind : std::uint8_t { On, In, Near, LeftOf, RightOf, Behind, FrontOf };

std::string_view to_string(RelationKind k);
std::optional<RelationKind> relation_kind_from_string(std::string_view s);

struct Relation {
  std::string subject;
  RelationKind kind = RelationKind::Near;
  std::string object;
  auto operator<=>(const Relation&) const = default;
};

struct Region {
  std::string name;
  Cell cell;
  auto operator<=>(const Region&) const = default;
};

struct Scene {
  std::string scene_id;
  GridSize grid;
  std::vector<ObjectEntity> objects;  // sorted by id
  std::vector<Relation> relations;    // sorted
  std::vector<Region> regions;        // sorted by name

  const ObjectEntity* find_object(std::string_view id) const;
  const Region* find_region(std::string_view name) const;
  void normalize();  // sorts members into canonical order
  bool operator==(const Scene&) const = default;
};

// Category -> admissible affordances and the default initial state.
struct CategoryInfo {
  AffordanceSet affordances;
  std::optional<std::string> default_state;
  std::vector<std::string> states;  // admissible state values, empty if stateless
};

const std::map<std::string, CategoryInfo>& category_table();

// Throws Error(SchemaViolation) describing the first violated invariant.
void validate_scene(const Scene& scene);

inline constexpr std::string_view kSceneSchema = "scene/v1";

nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

}  // namespace roboevolve
