#include <cmath>

#include "doctest.h"
#include "roboevolve/curriculum.hpp"
#include "roboevolve/error.hpp"

using namespace roboevolve;

namespace {

Curriculum make(double lambda, int bins = 3, std::size_t window = 200) {
  CurriculumConfig c;
  c.lambda = lambda;
  c.num_bins = bins;
  c.window = window;
  return Curriculum(c);
}

void record(Curriculum& c, int bin, std::initializer_list<int> outcomes) {
  for (int o : outcomes) c.record_outcome(bin, o != 0);
}

}  // namespace

TEST_CASE("record outcome updates count and windowed rate") {
  auto c = make(0.1);
  c.record_outcome(1, true);
  CHECK(c.count(1) == 1);
  CHECK(c.success_rate(1) == 1.0);
  CHECK(c.success_rate(2) == 0.0);

  auto alt = make(0.1);
  for (int i = 0; i < 100; ++i) alt.record_outcome(2, i % 2 == 0);
  CHECK(alt.success_rate(2) == 0.5);

  auto w = make(0.1, 3, 4);
  record(w, 1, {0, 0, 1, 1, 1, 1});
  CHECK(w.success_rate(1) == 1.0);
  CHECK(w.count(1) == 6);
}

TEST_CASE("unknown bins are rejected") {
  auto c = make(0.1);
  try {
    c.record_outcome(4, true);
    FAIL("expected UnknownBin");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownBin);
  }
  CHECK_THROWS_AS(c.record_outcome(0, true), Error);
}

TEST_CASE("learning progress across one checkpoint") {
  auto c = make(0.1, 2, 20);
  record(c, 1, {1, 1, 1, 0, 0, 0, 0, 0, 0, 0});  // 0.3
  CHECK(c.learning_progress(1) == doctest::Approx(0.3));  // bootstrap: current rate
  c.checkpoint();
  record(c, 1, {1, 1, 1, 1});  // 7/14
  c.checkpoint();
  CHECK(c.learning_progress(1) == doctest::Approx(0.2));
  c.checkpoint();
  CHECK(c.learning_progress(1) == 0.0);
}

TEST_CASE("saturated bin has zero progress") {
  auto c = make(0.1);
  record(c, 1, {1, 1, 1, 1});
  c.checkpoint();
  record(c, 1, {1, 1, 1, 1});
  c.checkpoint();
  CHECK(c.learning_progress(1) == 0.0);
}

TEST_CASE("UCB scores for the two-bin example") {
  auto c = make(0.1, 2);
  for (int i = 0; i < 50; ++i) c.record_outcome(1, false);
  record(c, 2, {1, 0});
  c.checkpoint();
  for (int i = 0; i < 50; ++i) c.record_outcome(1, false);
  record(c, 2, {1, 0, 1});
  c.checkpoint();
  REQUIRE(c.count(1) == 100);
  REQUIRE(c.count(2) == 5);
  CHECK(c.learning_progress(1) == 0.0);
  CHECK(c.learning_progress(2) == doctest::Approx(0.1));
  const auto s = c.ucb_scores();
  CHECK(s[0] == doctest::Approx(0.0215).epsilon(0.01));
  CHECK(s[1] == doctest::Approx(0.1881).epsilon(0.001));
  Rng rng(0);
  CHECK(c.select_bin(rng) == 2);
}

TEST_CASE("lambda zero is a pure argmax over progress") {
  auto c = make(0.0, 3);
  record(c, 1, {0, 0});
  record(c, 2, {0, 0});
  record(c, 3, {0, 0});
  c.checkpoint();
  record(c, 1, {1});
  record(c, 2, {1, 1, 1});
  record(c, 3, {1, 1});
  c.checkpoint();
  Rng rng(0);
  CHECK(c.select_bin(rng) == 2);
}

TEST_CASE("ties go to the lowest bin") {
  auto c = make(0.1, 3);
  record(c, 1, {1, 0});
  record(c, 2, {1, 0});
  record(c, 3, {1, 0});
  Rng rng(0);
  CHECK(c.select_bin(rng) == 1);
}

TEST_CASE("cold start picks uniformly from the seeded stream") {
  auto c = make(0.1, 3);
  std::array<int, 3> hits{};
  for (std::uint64_t s = 0; s < 3000; ++s) {
    Rng rng = Rng::substream(s, StreamTag::Curriculum, {});
    ++hits[static_cast<std::size_t>(c.select_bin(rng) - 1)];
  }
  for (int h : hits) CHECK(std::abs(h - 1000) < 100);
}

TEST_CASE("scaling progress with lambda zero keeps the choice") {
  Rng gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::array<std::vector<int>, 3> first, second;
    for (auto& v : first)
      for (int i = 0; i < 10; ++i) v.push_back(gen.bernoulli(0.5));
    for (auto& v : second)
      for (int i = 0; i < 10; ++i) v.push_back(gen.bernoulli(0.5));
    auto run = [&](std::size_t repeat) {
      auto c = make(0.0, 3, 1000);
      for (int b = 0; b < 3; ++b)
        for (std::size_t r = 0; r < repeat; ++r)
          for (int o : first[static_cast<std::size_t>(b)]) c.record_outcome(b + 1, o != 0);
      c.checkpoint();
      for (int b = 0; b < 3; ++b)
        for (std::size_t r = 0; r < repeat; ++r)
          for (int o : second[static_cast<std::size_t>(b)]) c.record_outcome(b + 1, o != 0);
      c.checkpoint();
      Rng rng(0);
      return c.select_bin(rng);
    };
    CHECK(run(1) == run(3));
  }
}

TEST_CASE("a saturated easy bin eventually yields to a rising harder bin") {
  auto c = make(0.1, 2);
  double rate2 = 0.2;
  Rng rng(1);
  int chosen = 1;
  for (int phase = 0; phase < 20 && chosen == 1; ++phase) {
    for (int i = 0; i < 200; ++i) c.record_outcome(1, true);
    for (int i = 0; i < 20; ++i) c.record_outcome(2, rng.bernoulli(rate2));
    rate2 = std::min(1.0, rate2 + 0.1);
    c.checkpoint();
    chosen = c.select_bin(rng);
  }
  CHECK(chosen == 2);
}

TEST_CASE("curriculum state round-trips through JSON") {
  auto c = make(0.05, 3, 8);
  record(c, 1, {1, 0, 1, 1, 0, 1, 1, 1, 0, 1});
  record(c, 3, {0, 1});
  c.checkpoint();
  record(c, 2, {1});
  const auto back = Curriculum::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.ucb_scores() == c.ucb_scores());
}

TEST_CASE("config validation") {
  CurriculumConfig c;
  c.lambda = -0.1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.window = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}
