#pragma once

#include <deque>
#include <vector>

#include "json.hpp"
#include "roboevolve/rng.hpp"

namespace roboevolve {

struct CurriculumConfig {
  int num_bins = 3;
  double lambda = 0.1;
  std::size_t window = 200;
  std::size_t lookback = 1;  // in checkpoints

  void validate() const;
};

struct BinStats {
  std::uint64_t count = 0;
  std::deque<int> recent;  // last `window` outcomes
  std::vector<double> checkpoints;
};

// Progress-based UCB over difficulty bins 1..num_bins.
class Curriculum {
 public:
  explicit Curriculum(CurriculumConfig config = {});

  const CurriculumConfig& config() const { return config_; }

  void record_outcome(int bin, bool success);
  // Snapshots every bin's windowed success rate.
  void checkpoint();

  std::uint64_t count(int bin) const;
  std::uint64_t total_count() const;
  double success_rate(int bin) const;  // windowed; 0 for an untouched bin
  double learning_progress(int bin) const;
  std::vector<double> ucb_scores() const;
  // Cold start (no outcomes at all) falls back to a uniform pick from `rng`.
  int select_bin(Rng& rng) const;

  nlohmann::json to_json() const;
  static Curriculum from_json(const nlohmann::json& j);

 private:
  const BinStats& stats(int bin) const;
  BinStats& stats(int bin);

  CurriculumConfig config_;
  std::vector<BinStats> bins_;
};

}  // namespace roboevolve
