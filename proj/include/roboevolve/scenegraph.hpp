#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "roboevolve/action.hpp"
#include "roboevolve/rng.hpp"
#include "roboevolve/scene.hpp"
#include "roboevolve/world_state.hpp"

namespace roboevolve {

struct VotingConfig {
  int m = 8;
  // Strict majority: an item survives when it appears in more than m/2 parses.
  int threshold() const { return m / 2 + 1; }
};

// Mock of a perception pass over a ground-truth scene. Each true object,
// relation and region is independently dropped with `drop_rate`; for each
// true object one spurious object is injected with `hallucinate_rate`.
Scene parse_scene_noisy(const Scene& truth, double drop_rate, double hallucinate_rate, Rng& rng);

// Self-consistency vote over m parses of the same scene.
Scene vote_scene(const std::vector<Scene>& parses, const VotingConfig& cfg);

// Pairs of objects resting on the same cell with no on/in link between them.
// A vote can lose a support relation while keeping both objects; such scenes
// violate co-occupancy before any action is taken.
std::vector<std::pair<std::string, std::string>> unlinked_colocations(const Scene& scene);

struct TaskEntry {
  std::string scene_id;
  Plan plan;
  auto operator<=>(const TaskEntry&) const = default;
};

struct TaskRepository {
  std::map<int, std::vector<TaskEntry>> bins;
  std::set<ActionKind> template_ids;

  std::size_t count(int bin) const;
  std::size_t total() const;
  void merge(const TaskRepository& other);
};

inline constexpr std::size_t kDefaultChainBudget = 4096;

// Builds difficulty bins 1..max_difficulty for one scene. Bin b holds chains
// of b actions, each applicable in the state left by faithfully executing its
// prefix. Chains that return the scene to its initial state are excluded, and
// each bin keeps at most `chain_budget` chains in lexicographic order.
TaskRepository instantiate_tasks(const Scene& scene, int max_difficulty,
                                 std::size_t chain_budget = kDefaultChainBudget);

// One JSON object per line: {"scene_id", "bin", "goal"}.
void write_repository_jsonl(const TaskRepository& repo, std::ostream& out);
TaskRepository read_repository_jsonl(std::istream& in);

}  // namespace roboevolve
