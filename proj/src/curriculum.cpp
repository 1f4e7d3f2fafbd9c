#include "roboevolve/curriculum.hpp"

#include <cmath>

#include "roboevolve/error.hpp"

namespace roboevolve {

void CurriculumConfig::validate() const {
  if (num_bins < 1) throw Error(ErrorCode::ConfigInvalid, "curriculum needs at least one bin");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::ConfigInvalid, "lambda must be >= 0");
  if (window < 1) throw Error(ErrorCode::ConfigInvalid, "success window must be positive");
  if (lookback < 1) throw Error(ErrorCode::ConfigInvalid, "lookback must be at least one checkpoint");
}

Curriculum::Curriculum(CurriculumConfig config) : config_(config) {
  config_.validate();
  bins_.resize(static_cast<std::size_t>(config_.num_bins));
}

const BinStats& Curriculum::stats(int bin) const {
  if (bin < 1 || bin > config_.num_bins) throw Error(ErrorCode::UnknownBin, "unknown bin " + std::to_string(bin));
  return bins_[static_cast<std::size_t>(bin - 1)];
}

BinStats& Curriculum::stats(int bin) { return const_cast<BinStats&>(std::as_const(*this).stats(bin)); }

void Curriculum::record_outcome(int bin, bool success) {
  BinStats& s = stats(bin);
  ++s.count;
  s.recent.push_back(success ? 1 : 0);
  while (s.recent.size() > config_.window) s.recent.pop_front();
}

void Curriculum::checkpoint() {
  for (int b = 1; b <= config_.num_bins; ++b) stats(b).checkpoints.push_back(success_rate(b));
}

std::uint64_t Curriculum::count(int bin) const { return stats(bin).count; }

std::uint64_t Curriculum::total_count() const {
  std::uint64_t n = 0;
  for (const auto& s : bins_) n += s.count;
  return n;
}

double Curriculum::success_rate(int bin) const {
  const BinStats& s = stats(bin);
  if (s.recent.empty()) return 0.0;
  double sum = 0.0;
  for (int x : s.recent) sum += x;
  return sum / static_cast<double>(s.recent.size());
}

double Curriculum::learning_progress(int bin) const {
  const BinStats& s = stats(bin);
  const std::size_t k = s.checkpoints.size();
  if (k <= config_.lookback) return success_rate(bin);
  return s.checkpoints[k - 1] - s.checkpoints[k - 1 - config_.lookback];
}

std::vector<double> Curriculum::ucb_scores() const {
  const double total = static_cast<double>(total_count());
  std::vector<double> scores;
  for (int b = 1; b <= config_.num_bins; ++b) {
    const double bonus = total > 0 ? std::sqrt(std::log(total) / (static_cast<double>(count(b)) + 1.0)) : 0.0;
    scores.push_back(learning_progress(b) + config_.lambda * bonus);
  }
  return scores;
}

int Curriculum::select_bin(Rng& rng) const {
  if (total_count() == 0) return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(config_.num_bins)));
  const auto scores = ucb_scores();
  int best = 1;
  for (int b = 2; b <= config_.num_bins; ++b)
    if (scores[static_cast<std::size_t>(b - 1)] > scores[static_cast<std::size_t>(best - 1)]) best = b;
  return best;
}

nlohmann::json Curriculum::to_json() const {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& s : bins_)
    bins.push_back({{"count", s.count}, {"recent", std::vector<int>(s.recent.begin(), s.recent.end())},
                    {"checkpoints", s.checkpoints}});
  return {{"num_bins", config_.num_bins}, {"lambda", config_.lambda}, {"window", config_.window},
          {"lookback", config_.lookback}, {"bins", std::move(bins)}};
}

Curriculum Curriculum::from_json(const nlohmann::json& j) {
  CurriculumConfig cfg;
  cfg.num_bins = j.at("num_bins").get<int>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.window = j.at("window").get<std::size_t>();
  cfg.lookback = j.at("lookback").get<std::size_t>();
  Curriculum c(cfg);
  const auto& bins = j.at("bins");
  if (bins.size() != c.bins_.size()) throw Error(ErrorCode::SchemaViolation, "curriculum bin count mismatch");
  for (std::size_t i = 0; i < bins.size(); ++i) {
    c.bins_[i].count = bins[i].at("count").get<std::uint64_t>();
    const auto recent = bins[i].at("recent").get<std::vector<int>>();
    c.bins_[i].recent.assign(recent.begin(), recent.end());
    c.bins_[i].checkpoints = bins[i].at("checkpoints").get<std::vector<double>>();
  }
  return c;
}

}  // namespace roboevolve
