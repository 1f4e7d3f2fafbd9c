#pragma once

// Exhaustive chain enumerator that does not share code with the library's
// depth-first search: it grounds every kind over a universal argument
// vocabulary and keeps the tuples a faithful replay accepts.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "roboevolve/scene.hpp"
#include "roboevolve/world_state.hpp"

namespace brute {

using namespace roboevolve;

inline std::vector<std::string> vocabulary(const Scene& scene) {
  std::vector<std::string> v;
  for (const auto& o : scene.objects) v.push_back(o.id);
  for (const auto& r : scene.regions) v.push_back(r.name);
  for (const char* w : {"east", "north", "south", "west", "zip", "unzip", "0", "90", "180", "on", "off", "up",
                        "down"})
    v.push_back(w);
  return v;
}

inline std::vector<AtomicAction> grounded_actions(const Scene& scene) {
  const auto vocab = vocabulary(scene);
  std::vector<AtomicAction> out;
  for (ActionKind k : kAllActionKinds) {
    const std::size_t n = arity(k);
    std::vector<std::size_t> idx(n, 0);
    while (true) {
      AtomicAction a{k, {}};
      for (std::size_t i : idx) a.args.push_back(vocab[i]);
      out.push_back(std::move(a));
      std::size_t pos = 0;
      while (pos < n && ++idx[pos] == vocab.size()) idx[pos++] = 0;
      if (pos == n) break;
    }
  }
  return out;
}

// Number of length-b chains, excluding chains that end where they started,
// truncated to the first `budget` in clause order.
inline std::size_t count_chains(const Scene& scene, int b, std::size_t budget) {
  const WorldState init = initial_state(scene);
  const auto actions = grounded_actions(scene);
  std::vector<std::vector<std::string>> found;
  std::vector<const AtomicAction*> chain(static_cast<std::size_t>(b), nullptr);
  auto rec = [&](auto&& self, const WorldState& s, int depth) -> void {
    if (depth == b) {
      if (s == init) return;
      std::vector<std::string> key;
      for (auto* a : chain) key.push_back(a->clause());
      found.push_back(std::move(key));
      return;
    }
    for (const auto& a : actions) {
      if (!preconditions_hold(s, a)) continue;
      chain[static_cast<std::size_t>(depth)] = &a;
      self(self, apply_effects(s, a), depth + 1);
    }
  };
  rec(rec, init, 0);
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  return std::min(found.size(), budget);
}

}  // namespace brute
