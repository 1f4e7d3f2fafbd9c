#include "roboevolve/store.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "roboevolve/error.hpp"

namespace fs = std::filesystem;

namespace roboevolve {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

IngestResult ingest_scenes(const fs::path& dir) {
  IngestResult result;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "scene directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) result.warnings.push_back("no scene files in " + dir.string());

  std::vector<std::string> problems;
  std::map<std::string, fs::path> origin;
  for (const auto& file : files) {
    const std::string text = read_text_file(file);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      problems.push_back(file.string() + ":" + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
      continue;
    }
    Scene scene;
    try {
      scene = scene_from_json(j);
      validate_scene(scene);
    } catch (const Error& e) {
      problems.push_back(file.string() + ":1: " + e.what());
      continue;
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(file.string() + ":1: " + e.what());
      continue;
    }
    auto [it, fresh] = origin.emplace(scene.scene_id, file);
    if (!fresh)
      throw Error(ErrorCode::DuplicateSceneId, "scene_id '" + scene.scene_id + "' declared in both " +
                                                   it->second.string() + " and " + file.string());
    result.scenes.push_back(std::move(scene));
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " invalid scene file(s)";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorCode::SchemaViolation, msg);
  }
  std::sort(result.scenes.begin(), result.scenes.end(),
            [](const Scene& a, const Scene& b) { return a.scene_id < b.scene_id; });
  return result;
}

nlohmann::json snapshot_to_json(const PolicySnapshot& s) {
  return {{"simulator", s.simulator.logits}, {"planner", planner_params_to_json(s.planner)}};
}

PolicySnapshot snapshot_from_json(const nlohmann::json& j) {
  PolicySnapshot s;
  const auto logits = j.at("simulator").get<std::vector<double>>();
  if (logits.size() != kSimulatorParamCount) throw Error(ErrorCode::SchemaViolation, "simulator logit count mismatch");
  std::copy(logits.begin(), logits.end(), s.simulator.logits.begin());
  s.planner = planner_params_from_json(j.at("planner"));
  return s;
}

CheckpointStore::CheckpointStore(fs::path dir) : dir_(std::move(dir)) {}

fs::path CheckpointStore::path_of(const std::string& tag) const { return dir_ / (tag + ".json"); }

bool CheckpointStore::contains(const std::string& tag) const { return fs::exists(path_of(tag)); }

void CheckpointStore::save(const std::string& tag, const PolicySnapshot& snapshot) const {
  for (double v : snapshot.simulator.logits)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteParams, "refusing to checkpoint non-finite parameters");
  const nlohmann::json payload = snapshot_to_json(snapshot);
  const std::string body = payload.dump();
  const nlohmann::json doc = {{"tag", tag}, {"payload", payload}, {"sha256", sha256_hex(body)}};
  write_text_file(path_of(tag), doc.dump(2) + "\n");
}

PolicySnapshot CheckpointStore::restore(const std::string& tag) const {
  const fs::path p = path_of(tag);
  if (!fs::exists(p)) throw Error(ErrorCode::MissingCheckpoint, "no checkpoint tagged '" + tag + "' in " + dir_.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IntegrityError, "checkpoint '" + tag + "' is unreadable: " + e.what());
  }
  if (!doc.contains("payload") || !doc.contains("sha256"))
    throw Error(ErrorCode::IntegrityError, "checkpoint '" + tag + "' lacks payload or digest");
  if (sha256_hex(doc.at("payload").dump()) != doc.at("sha256").get<std::string>())
    throw Error(ErrorCode::IntegrityError, "checkpoint '" + tag + "' failed digest verification");
  try {
    return snapshot_from_json(doc.at("payload"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IntegrityError, "checkpoint '" + tag + "' payload malformed: " + e.what());
  }
}

JsonlWriter::JsonlWriter(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::Io, "cannot open " + path.string());
}

void JsonlWriter::append(nlohmann::json record) {
  record["index"] = next_++;
  out_ << record.dump() << '\n';
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows)
    out << r.phase << ',' << r.iteration << ',' << r.bin << ',' << opt(r.objective) << ',' << opt(r.dpo_loss) << ','
        << opt(r.reward_mean) << ',' << opt(r.success_rate) << ',' << opt(r.i_sem_mean) << ',' << opt(r.s_f_rate)
        << ',' << opt(r.seg_mean) << ',' << opt(r.s_e_rate) << '\n';
}

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingMetrics, "metrics file not found: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader)
    throw Error(ErrorCode::MissingMetrics, "metrics file has no header: " + path.string());
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 11) f.emplace_back();
    MetricsRow r;
    r.phase = f[0];
    r.iteration = std::stoi(f[1]);
    r.bin = std::stoi(f[2]);
    r.objective = parse_opt(f[3]);
    r.dpo_loss = parse_opt(f[4]);
    r.reward_mean = parse_opt(f[5]);
    r.success_rate = parse_opt(f[6]);
    r.i_sem_mean = parse_opt(f[7]);
    r.s_f_rate = parse_opt(f[8]);
    r.seg_mean = parse_opt(f[9]);
    r.s_e_rate = parse_opt(f[10]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorCode::MissingMetrics, "metrics file has no rows: " + path.string());
  return rows;
}

nlohmann::json make_manifest(const LoopConfig& config) {
  const nlohmann::json cfg = loop_config_to_json(config);
  return {{"config_hash", sha256_hex(cfg.dump())},
          {"master_seed", config.seed},
          {"seed_rule", "splitmix64(master, stream tag, structural indices) -> mt19937_64"},
          {"versions", {{"tool", kToolVersion}, {"scene_schema", "scene/v1"}, {"metrics", "v1"}}},
          {"config", cfg}};
}

}  // namespace roboevolve
