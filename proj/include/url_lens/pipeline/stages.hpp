#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "url_lens/pipeline/manifest.hpp"
#include "url_lens/pipeline/run_config.hpp"
#include "url_lens/procenv/env.hpp"

namespace url_lens::pipeline {

enum class Stage { train, attribute, vae, metrics, report };

inline constexpr Stage kAllStages[] = {Stage::train, Stage::attribute, Stage::vae, Stage::metrics, Stage::report};

std::string_view stage_name(Stage s);

struct PipelineOptions {
  bool deterministic = false;  // forces one job
  int jobs = 1;
  bool force = false;          // re-execute selected stages even when fresh
  std::optional<std::filesystem::path> dump_frames;
  std::ostream* log = nullptr;
};

/// Reads URL_LENS_DETERMINISTIC and the hardware concurrency.
PipelineOptions options_from_environment();

struct Selection {
  std::optional<agents::AgentKind> agent;
  std::optional<std::uint64_t> seed;
};

/// Output layout below the run directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path seed_dir(std::uint64_t seed) const;
  std::filesystem::path checkpoints(std::uint64_t seed) const { return seed_dir(seed) / "checkpoints"; }
  std::filesystem::path logs(std::uint64_t seed) const { return seed_dir(seed) / "logs"; }
  std::filesystem::path frames(std::uint64_t seed) const { return seed_dir(seed) / "frames"; }
  std::filesystem::path saliency(std::uint64_t seed, std::string_view agent) const;
  std::filesystem::path vae(std::uint64_t seed) const { return seed_dir(seed) / "vae"; }
  std::filesystem::path latents(std::uint64_t seed) const { return seed_dir(seed) / "latents"; }
  std::filesystem::path metrics(std::uint64_t seed) const { return seed_dir(seed) / "metrics"; }
  std::filesystem::path report() const { return root / "report"; }
};

std::string stage_key(Stage stage, std::optional<std::uint64_t> seed = {}, std::string_view agent = {});

/// Raw uint8 frames (n x 12288) with a JSON sidecar.
void write_frames(const std::filesystem::path& path, const std::vector<procenv::Observation>& frames,
                  const std::string& config_hash);
std::vector<procenv::Observation> read_frames(const std::filesystem::path& path);

class Pipeline {
 public:
  Pipeline(RunConfig config, PipelineOptions options);

  /// Runs the requested stages in pipeline order over the selection. Fresh
  /// stages are skipped. Returns true when every requested stage completed
  /// without gaps.
  bool run(std::vector<Stage> stages, const Selection& selection = {});

  const RunConfig& config() const { return config_; }
  const std::string& hash() const { return hash_; }
  const Layout& layout() const { return layout_; }
  Manifest& manifest() { return manifest_; }

 private:
  struct Job {
    std::uint64_t seed;
    agents::AgentKind agent;
  };

  bool run_stage(const std::string& key, const std::vector<std::string>& upstream, bool need_all_upstream,
                 const std::function<std::vector<std::string>()>& body);
  bool for_jobs(const std::vector<Job>& jobs, const std::function<bool(const Job&)>& fn);
  void log(const std::string& line);

  std::vector<std::string> train(std::uint64_t seed, agents::AgentKind agent);
  std::vector<std::string> attribute(std::uint64_t seed, agents::AgentKind agent);
  std::vector<std::string> vae(std::uint64_t seed, agents::AgentKind agent);
  std::vector<std::string> metrics(std::uint64_t seed, const std::vector<agents::AgentKind>& available);

  std::string relative(const std::filesystem::path& p) const;

  RunConfig config_;
  PipelineOptions options_;
  std::string hash_;
  Layout layout_;
  Manifest manifest_;
  std::mutex log_mutex_;
  bool report_gaps_ = false;
};

}  // namespace url_lens::pipeline
