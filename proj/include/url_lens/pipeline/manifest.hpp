#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace url_lens::pipeline {

enum class StageStatus { complete, failed, skipped };

struct StageRecord {
  StageStatus status = StageStatus::skipped;
  std::string config_hash;
  long generation = 0;                 // bumped every time the stage executes
  std::map<std::string, long> inputs;  // upstream key -> generation consumed
  std::vector<std::string> artifacts;  // relative to the output directory
  double wall_clock_s = 0.0;
  std::string error;
};

/// Stage completion records for one output directory (manifest.json).
/// Thread-safe; every mutation is written through to disk.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path() const { return root_ / "manifest.json"; }

  /// Complete for `hash`, every artifact present, and every upstream stage
  /// still at the generation this record consumed.
  bool is_fresh(const std::string& key, const std::string& hash, const std::vector<std::string>& upstream) const;
  bool is_complete(const std::string& key, const std::string& hash) const;
  long generation(const std::string& key) const;

  /// Stores a finished execution and returns its generation.
  long record(const std::string& key, StageRecord record, const std::vector<std::string>& upstream);
  /// Marks a stage that was not run (upstream failure) without bumping its generation.
  void mark(const std::string& key, StageStatus status, const std::string& hash, const std::string& error);

  std::map<std::string, StageRecord> snapshot() const;

 private:
  void save_locked() const;

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::map<std::string, StageRecord> stages_;
  long counter_ = 0;
};

std::string_view status_name(StageStatus s);

}  // namespace url_lens::pipeline
