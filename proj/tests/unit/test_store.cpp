#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "roboevolve/error.hpp"
#include "roboevolve/store.hpp"
#include "temp_dir.hpp"

using namespace roboevolve;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

PolicySnapshot random_snapshot(std::uint64_t seed) {
  Rng rng(seed);
  PolicySnapshot s;
  for (auto& v : s.simulator.logits) v = (rng.uniform() - 0.5) * 1e3 / 7.0;
  for (auto& w : s.planner.weights) w = (rng.uniform() - 0.5) / 3.0;
  s.planner.temperature = 0.1 + rng.uniform();
  return s;
}

}  // namespace

TEST_CASE("sha256 matches the standard test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("the demo pack ingests cleanly") {
  const auto r = ingest_scenes(ROBOEVOLVE_DEMO_SCENES);
  CHECK(r.scenes.size() == 24);
  CHECK(r.warnings.empty());
  CHECK(std::is_sorted(r.scenes.begin(), r.scenes.end(),
                       [](const Scene& a, const Scene& b) { return a.scene_id < b.scene_id; }));
}

TEST_CASE("an empty directory ingests to nothing with a warning") {
  TempDir dir;
  const auto r = ingest_scenes(dir.path());
  CHECK(r.scenes.empty());
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("duplicate scene ids name both files") {
  TempDir dir;
  const std::string doc = scene_to_json(fixtures::kitchen()).dump(2);
  write_text_file(dir / "a.json", doc);
  write_text_file(dir / "b.json", doc);
  try {
    ingest_scenes(dir.path());
    FAIL("expected DuplicateSceneId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateSceneId);
    const std::string what = e.what();
    CHECK(what.find("a.json") != std::string::npos);
    CHECK(what.find("b.json") != std::string::npos);
  }
}

TEST_CASE("schema violations are reported per file") {
  TempDir dir;
  write_text_file(dir / "good.json", scene_to_json(fixtures::kitchen()).dump(2));
  write_text_file(dir / "broken.json", "{\n  \"schema\": \"scene/v1\",\n  \"scene_id\": \n}\n");
  auto missing = scene_to_json(fixtures::tabletop());
  missing.erase("scene_id");
  write_text_file(dir / "noid.json", missing.dump(2));
  try {
    ingest_scenes(dir.path());
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
    const std::string what = e.what();
    CHECK(what.find("broken.json") != std::string::npos);
    CHECK(what.find("line") != std::string::npos);
    CHECK(what.find("noid.json") != std::string::npos);
    CHECK(what.find("good.json") == std::string::npos);
  }
}

TEST_CASE("scene JSON round-trips") {
  for (const Scene& s : {fixtures::kitchen(), fixtures::tabletop(), fixtures::twelve_objects()})
    CHECK(scene_from_json(scene_to_json(s)) == s);
}

TEST_CASE("checkpoints restore bit-exactly") {
  TempDir dir;
  const CheckpointStore store(dir.path());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto snap = random_snapshot(seed);
    const std::string tag = "phase" + std::to_string(seed);
    store.save(tag, snap);
    CHECK(store.contains(tag));
    CHECK(store.restore(tag) == snap);
  }
}

TEST_CASE("unknown checkpoint tags are missing") {
  TempDir dir;
  const CheckpointStore store(dir.path());
  CHECK_FALSE(store.contains("nope"));
  CHECK(code_of([&] { store.restore("nope"); }) == ErrorCode::MissingCheckpoint);
}

TEST_CASE("a tampered checkpoint fails its digest") {
  TempDir dir;
  const CheckpointStore store(dir.path());
  store.save("t", random_snapshot(1));
  auto j = nlohmann::json::parse(read_text_file(store.path_of("t")));
  j["payload"]["planner"]["temperature"] = 42.0;
  write_text_file(store.path_of("t"), j.dump());
  CHECK(code_of([&] { store.restore("t"); }) == ErrorCode::IntegrityError);

  write_text_file(store.path_of("t"), "{ not json");
  CHECK(code_of([&] { store.restore("t"); }) == ErrorCode::IntegrityError);
}

TEST_CASE("JSON Lines sink indexes records in order") {
  TempDir dir;
  {
    JsonlWriter w(dir / "exp.jsonl");
    for (int i = 0; i < 5; ++i) w.append({{"value", i * 0.1}});
    CHECK(w.count() == 5);
  }
  const auto back = read_jsonl(dir / "exp.jsonl");
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i]["index"] == i);
    CHECK(back[i]["value"].get<double>() == static_cast<double>(i) * 0.1);
  }
}

TEST_CASE("metrics CSV round-trips with full precision") {
  std::vector<MetricsRow> rows(3);
  rows[0] = {"day_sim_1", 1, 1, 0.1, std::nullopt, 1.0 / 3.0, 0.25, 1.0, 0.5, 2.0 / 3.0, 0.125};
  rows[1] = {"day_plan_1", 2, 2, -1e-17, std::nullopt, 1.6, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
             std::nullopt};
  rows[2] = {"night_1", 0, 2, std::nullopt, 0.6931471805599453, std::nullopt, std::nullopt, std::nullopt,
             std::nullopt, std::nullopt, std::nullopt};
  TempDir dir;
  std::ostringstream out;
  write_metrics_csv(out, rows);
  CHECK(out.str().rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  write_text_file(dir / "metrics.csv", out.str());
  const auto back = read_metrics_csv(dir / "metrics.csv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].phase == rows[i].phase);
    CHECK(back[i].iteration == rows[i].iteration);
    CHECK(back[i].bin == rows[i].bin);
    CHECK(back[i].objective == rows[i].objective);
    CHECK(back[i].dpo_loss == rows[i].dpo_loss);
    CHECK(back[i].reward_mean == rows[i].reward_mean);
    CHECK(back[i].seg_mean == rows[i].seg_mean);
  }
}

TEST_CASE("missing or empty metrics are reported") {
  TempDir dir;
  CHECK(code_of([&] { read_metrics_csv(dir / "absent.csv"); }) == ErrorCode::MissingMetrics);
  write_text_file(dir / "empty.csv", std::string(kMetricsHeader) + "\n");
  CHECK(code_of([&] { read_metrics_csv(dir / "empty.csv"); }) == ErrorCode::MissingMetrics);
}

TEST_CASE("manifest hash tracks the config") {
  LoopConfig a = default_loop_config();
  LoopConfig b = default_loop_config();
  CHECK(make_manifest(a) == make_manifest(b));
  b.seed = 1;
  CHECK(make_manifest(a)["config_hash"] != make_manifest(b)["config_hash"]);
}
