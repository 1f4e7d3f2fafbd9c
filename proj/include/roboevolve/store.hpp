#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "roboevolve/loop.hpp"
#include "roboevolve/planner.hpp"
#include "roboevolve/scene.hpp"
#include "roboevolve/world.hpp"

namespace roboevolve {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);

struct IngestResult {
  std::vector<Scene> scenes;  // sorted by scene_id
  std::vector<std::string> warnings;
};

// Loads every *.json file under `dir` as a scene/v1 document. Throws
// Error(SchemaViolation) listing every bad file, or Error(DuplicateSceneId)
// naming both files that declare the same id.
IngestResult ingest_scenes(const std::filesystem::path& dir);

struct PolicySnapshot {
  SimulatorParams simulator;
  PlannerParams planner;
  bool operator==(const PolicySnapshot&) const = default;
};

nlohmann::json snapshot_to_json(const PolicySnapshot& s);
PolicySnapshot snapshot_from_json(const nlohmann::json& j);

// Parameter checkpoints as <dir>/<tag>.json with an embedded SHA-256 digest.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::filesystem::path dir);

  void save(const std::string& tag, const PolicySnapshot& snapshot) const;
  PolicySnapshot restore(const std::string& tag) const;  // MissingCheckpoint, IntegrityError
  bool contains(const std::string& tag) const;
  std::filesystem::path path_of(const std::string& tag) const;

 private:
  std::filesystem::path dir_;
};

// Append-only JSON Lines sink; every record gets a strictly increasing "index".
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void append(nlohmann::json record);
  std::uint64_t count() const { return next_; }

 private:
  std::ofstream out_;
  std::uint64_t next_ = 0;
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

inline constexpr std::string_view kMetricsHeader =
    "phase,iteration,bin,J,dpo_loss,reward_mean,success_rate,i_sem_mean,s_f_rate,seg_mean,s_e_rate";

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
// Throws Error(MissingMetrics) when the file is absent or has no data rows.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

nlohmann::json make_manifest(const LoopConfig& config);

// Writes `text` to `path` via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace roboevolve
