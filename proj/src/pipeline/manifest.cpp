#include "url_lens/pipeline/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace url_lens::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view status_name(StageStatus s) {
  switch (s) {
    case StageStatus::complete: return "complete";
    case StageStatus::failed: return "failed";
    case StageStatus::skipped: return "skipped";
  }
  return "?";
}

namespace {

StageStatus parse_status(const std::string& s) {
  if (s == "complete") return StageStatus::complete;
  if (s == "failed") return StageStatus::failed;
  return StageStatus::skipped;
}

}  // namespace

Manifest::Manifest(fs::path root) : root_(std::move(root)) {
  std::ifstream f(path());
  if (!f) return;
  const auto j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::runtime_error("corrupt manifest " + path().string());
  counter_ = j.value("generation", 0L);
  const auto stages = j.value("stages", nlohmann::json::object());
  for (const auto& [key, r] : stages.items()) {
    StageRecord rec;
    rec.status = parse_status(r.value("status", ""));
    rec.config_hash = r.value("config_hash", "");
    rec.generation = r.value("generation", 0L);
    rec.inputs = r.value("inputs", std::map<std::string, long>{});
    rec.artifacts = r.value("artifacts", std::vector<std::string>{});
    rec.wall_clock_s = r.value("wall_clock_s", 0.0);
    rec.error = r.value("error", "");
    stages_.emplace(key, std::move(rec));
  }
}

bool Manifest::is_complete(const std::string& key, const std::string& hash) const {
  std::lock_guard lock(mutex_);
  const auto it = stages_.find(key);
  return it != stages_.end() && it->second.status == StageStatus::complete && it->second.config_hash == hash;
}

long Manifest::generation(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = stages_.find(key);
  return it == stages_.end() ? 0 : it->second.generation;
}

bool Manifest::is_fresh(const std::string& key, const std::string& hash,
                        const std::vector<std::string>& upstream) const {
  std::lock_guard lock(mutex_);
  const auto it = stages_.find(key);
  if (it == stages_.end()) return false;
  const StageRecord& r = it->second;
  if (r.status != StageStatus::complete || r.config_hash != hash) return false;
  for (const auto& a : r.artifacts) {
    if (!fs::exists(root_ / a)) return false;
  }
  for (const auto& up : upstream) {
    const auto u = stages_.find(up);
    const auto consumed = r.inputs.find(up);
    if (u == stages_.end() || consumed == r.inputs.end() || u->second.generation != consumed->second) return false;
  }
  return true;
}

long Manifest::record(const std::string& key, StageRecord rec, const std::vector<std::string>& upstream) {
  std::lock_guard lock(mutex_);
  rec.generation = ++counter_;
  rec.inputs.clear();
  for (const auto& up : upstream) {
    const auto u = stages_.find(up);
    rec.inputs[up] = u == stages_.end() ? 0 : u->second.generation;
  }
  stages_[key] = std::move(rec);
  save_locked();
  return counter_;
}

void Manifest::mark(const std::string& key, StageStatus status, const std::string& hash, const std::string& error) {
  std::lock_guard lock(mutex_);
  auto& r = stages_[key];
  r.status = status;
  r.config_hash = hash;
  r.error = error;
  save_locked();
}

std::map<std::string, StageRecord> Manifest::snapshot() const {
  std::lock_guard lock(mutex_);
  return stages_;
}

void Manifest::save_locked() const {
  ordered_json j;
  j["generation"] = counter_;
  ordered_json stages = ordered_json::object();
  for (const auto& [key, r] : stages_) {
    ordered_json s;
    s["status"] = std::string(status_name(r.status));
    s["config_hash"] = r.config_hash;
    s["generation"] = r.generation;
    s["inputs"] = r.inputs;
    s["artifacts"] = r.artifacts;
    s["wall_clock_s"] = r.wall_clock_s;
    if (!r.error.empty()) s["error"] = r.error;
    stages[key] = std::move(s);
  }
  j["stages"] = std::move(stages);
  fs::create_directories(root_);
  const auto tmp = path().string() + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw std::runtime_error("cannot write manifest " + tmp);
    f << j.dump(2) << '\n';
  }
  fs::rename(tmp, path());
}

}  // namespace url_lens::pipeline
