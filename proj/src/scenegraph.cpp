#include "roboevolve/scenegraph.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>

#include "json.hpp"
#include "roboevolve/error.hpp"

namespace roboevolve {

namespace {

template <typename T>
T majority_value(const std::map<T, int>& counts) {
  // std::map iterates in ascending order, so the first maximum is the
  // lexicographically smallest candidate among ties.
  const T* best = nullptr;
  int best_count = -1;
  for (const auto& [value, c] : counts) {
    if (c > best_count) {
      best = &value;
      best_count = c;
    }
  }
  return *best;
}

std::string random_ghost_id(Rng& rng) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ghost_%08llx", static_cast<unsigned long long>(rng() & 0xffffffffULL));
  return buf;
}

}  // namespace

Scene parse_scene_noisy(const Scene& truth, double drop_rate, double hallucinate_rate, Rng& rng) {
  if (drop_rate < 0.0 || drop_rate >= 1.0 || hallucinate_rate < 0.0 || hallucinate_rate >= 1.0)
    throw Error(ErrorCode::ConfigInvalid, "noise rates must lie in [0, 1)");
  Scene out;
  out.scene_id = truth.scene_id;
  out.grid = truth.grid;

  std::set<std::string> kept;
  for (const auto& o : truth.objects) {
    if (rng.bernoulli(drop_rate)) continue;
    kept.insert(o.id);
    out.objects.push_back(o);
  }
  for (const auto& r : truth.relations) {
    const bool dropped = rng.bernoulli(drop_rate);
    if (!dropped && kept.count(r.subject) && kept.count(r.object)) out.relations.push_back(r);
  }
  for (const auto& reg : truth.regions)
    if (!rng.bernoulli(drop_rate)) out.regions.push_back(reg);

  const auto& table = category_table();
  for (std::size_t i = 0; i < truth.objects.size(); ++i) {
    if (!rng.bernoulli(hallucinate_rate)) continue;
    ObjectEntity ghost;
    ghost.id = random_ghost_id(rng);
    auto it = table.begin();
    std::advance(it, static_cast<long>(rng.below(table.size())));
    ghost.category = it->first;
    ghost.affordances = it->second.affordances;
    ghost.state = it->second.default_state;
    ghost.position = {static_cast<int>(rng.below(static_cast<std::uint64_t>(truth.grid.width))),
                      static_cast<int>(rng.below(static_cast<std::uint64_t>(truth.grid.height)))};
    out.objects.push_back(std::move(ghost));
  }

  // keep containment consistent with the relations that survived
  for (auto& o : out.objects) {
    if (!o.containment) continue;
    bool linked = false;
    for (const auto& r : out.relations)
      linked |= r.subject == o.id && r.object == *o.containment &&
                (r.kind == RelationKind::On || r.kind == RelationKind::In);
    if (!linked) o.containment.reset();
  }
  out.normalize();
  return out;
}

Scene vote_scene(const std::vector<Scene>& parses, const VotingConfig& cfg) {
  if (parses.empty()) throw Error(ErrorCode::EmptyParseSet, "no parses to vote over");
  if (cfg.m < 1) throw Error(ErrorCode::ConfigInvalid, "vote count m must be positive");
  if (static_cast<int>(parses.size()) != cfg.m)
    throw Error(ErrorCode::ConfigInvalid, "expected " + std::to_string(cfg.m) + " parses, got " +
                                              std::to_string(parses.size()));
  for (const auto& p : parses)
    if (p.scene_id != parses.front().scene_id)
      throw Error(ErrorCode::ConfigInvalid, "parses disagree on scene_id");

  const int need = cfg.threshold();

  struct ObjectVotes {
    int count = 0;
    std::map<std::string, int> category;
    std::map<int, int> x, y;
    std::map<std::string, int> containment;  // "" encodes none
    std::map<std::string, int> state;
  };
  std::map<std::string, ObjectVotes> objects;
  std::map<std::pair<std::string, Affordance>, int> affordances;
  std::map<Relation, int> relations;
  struct RegionVotes {
    int count = 0;
    std::map<int, int> x, y;
  };
  std::map<std::string, RegionVotes> regions;

  for (const auto& p : parses) {
    for (const auto& o : p.objects) {
      auto& v = objects[o.id];
      ++v.count;
      ++v.category[o.category];
      ++v.x[o.position.x];
      ++v.y[o.position.y];
      ++v.containment[o.containment.value_or("")];
      ++v.state[o.state.value_or("")];
      for (auto a : o.affordances) ++affordances[{o.id, a}];
    }
    for (const auto& r : p.relations) ++relations[r];
    for (const auto& r : p.regions) {
      auto& v = regions[r.name];
      ++v.count;
      ++v.x[r.cell.x];
      ++v.y[r.cell.y];
    }
  }

  Scene out;
  out.scene_id = parses.front().scene_id;
  out.grid = parses.front().grid;
  for (const auto& [id, v] : objects) {
    if (v.count < need) continue;
    ObjectEntity o;
    o.id = id;
    o.category = majority_value(v.category);
    o.position = {majority_value(v.x), majority_value(v.y)};
    if (auto c = majority_value(v.containment); !c.empty()) o.containment = c;
    if (auto s = majority_value(v.state); !s.empty()) o.state = s;
    for (std::size_t i = 0; i < kAffordanceCount; ++i) {
      auto a = static_cast<Affordance>(i);
      auto it = affordances.find({id, a});
      if (it != affordances.end() && it->second >= need) o.affordances.insert(a);
    }
    out.objects.push_back(std::move(o));
  }
  std::set<std::string> retained;
  for (const auto& o : out.objects) retained.insert(o.id);
  for (const auto& [r, c] : relations)
    if (c >= need && retained.count(r.subject) && retained.count(r.object)) out.relations.push_back(r);
  for (const auto& [name, v] : regions)
    if (v.count >= need) out.regions.push_back({name, {majority_value(v.x), majority_value(v.y)}});

  for (auto& o : out.objects) {
    if (!o.containment) continue;
    bool linked = false;
    for (const auto& r : out.relations)
      linked |= r.subject == o.id && r.object == *o.containment &&
                (r.kind == RelationKind::On || r.kind == RelationKind::In);
    if (!linked) o.containment.reset();
  }
  out.normalize();
  return out;
}

std::vector<std::pair<std::string, std::string>> unlinked_colocations(const Scene& scene) {
  std::set<std::string> supported;
  for (const auto& r : scene.relations)
    if (r.kind == RelationKind::On || r.kind == RelationKind::In) supported.insert(r.subject);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& a = scene.objects[i];
    if (supported.count(a.id)) continue;
    for (std::size_t j = i + 1; j < scene.objects.size(); ++j) {
      const auto& b = scene.objects[j];
      if (!supported.count(b.id) && a.position == b.position) out.emplace_back(a.id, b.id);
    }
  }
  return out;
}

std::size_t TaskRepository::count(int bin) const {
  auto it = bins.find(bin);
  return it == bins.end() ? 0 : it->second.size();
}

std::size_t TaskRepository::total() const {
  std::size_t n = 0;
  for (const auto& [_, v] : bins) n += v.size();
  return n;
}

void TaskRepository::merge(const TaskRepository& other) {
  for (const auto& [b, tasks] : other.bins) {
    auto& dst = bins[b];
    dst.insert(dst.end(), tasks.begin(), tasks.end());
  }
  template_ids.insert(other.template_ids.begin(), other.template_ids.end());
}

namespace {

struct ChainSearch {
  const WorldState& init;
  int length;
  std::size_t budget;
  std::vector<Plan>& out;
  Plan prefix;

  void run(const WorldState& s) {
    if (out.size() >= budget) return;
    if (static_cast<int>(prefix.size()) == length) {
      if (!(s == init)) out.push_back(prefix);
      return;
    }
    for (const auto& a : applicable_actions(s)) {
      prefix.actions.push_back(a);
      run(apply_effects(s, a));
      prefix.actions.pop_back();
      if (out.size() >= budget) return;
    }
  }
};

}  // namespace

TaskRepository instantiate_tasks(const Scene& scene, int max_difficulty, std::size_t chain_budget) {
  if (max_difficulty < 1) throw Error(ErrorCode::ConfigInvalid, "max_difficulty must be >= 1");
  const WorldState init = initial_state(scene);
  TaskRepository repo;
  for (int b = 1; b <= max_difficulty; ++b) {
    std::vector<Plan> chains;
    ChainSearch search{init, b, chain_budget, chains, {}};
    search.run(init);
    if (b == 1 && chains.empty())
      throw Error(ErrorCode::UnsatisfiableScene, "scene '" + scene.scene_id + "' admits no atomic task");
    auto& bin = repo.bins[b];
    for (auto& p : chains) {
      for (const auto& a : p.actions) repo.template_ids.insert(a.kind);
      bin.push_back({scene.scene_id, std::move(p)});
    }
  }
  return repo;
}

void write_repository_jsonl(const TaskRepository& repo, std::ostream& out) {
  for (const auto& [b, tasks] : repo.bins)
    for (const auto& t : tasks)
      out << nlohmann::json{{"scene_id", t.scene_id}, {"bin", b}, {"goal", t.plan.goal_text()}}.dump() << '\n';
}

TaskRepository read_repository_jsonl(std::istream& in) {
  TaskRepository repo;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, "task repository line " + std::to_string(lineno) + ": " + e.what());
    }
    auto plan = parse_goal_text(j.at("goal").get<std::string>());
    if (!plan || plan->empty())
      throw Error(ErrorCode::SchemaViolation, "task repository line " + std::to_string(lineno) + ": bad goal");
    const int b = j.at("bin").get<int>();
    if (plan->difficulty() != b)
      throw Error(ErrorCode::SchemaViolation,
                  "task repository line " + std::to_string(lineno) + ": difficulty does not match bin");
    for (const auto& a : plan->actions) repo.template_ids.insert(a.kind);
    repo.bins[b].push_back({j.at("scene_id").get<std::string>(), std::move(*plan)});
  }
  return repo;
}

}  // namespace roboevolve
