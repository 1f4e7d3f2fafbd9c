#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace roboevolve {

// Stream tags for the structural seed derivation. A substream is keyed by the
// master seed, a tag, and the structural indices of the draw site (phase,
// iteration, rollout, ...), never by call order, so serial and parallel
// rollout execution consume identical draws.
enum class StreamTag : std::uint64_t {
  Parse = 1,
  SimRollout,
  SimTask,
  PlanSample,
  PlanTask,
  PlanSim,
  Mining,
  Eval,
  Probe,
  Bootstrap,
  Curriculum,
  Split,
  Test,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t master, StreamTag tag,
                       std::initializer_list<std::uint64_t> keys = {});

  // Uniform on [0, 1) with 53 random bits; independent of the standard
  // library's distribution implementations.
  double uniform();

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace roboevolve
