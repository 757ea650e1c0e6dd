#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "url_lens/pipeline/manifest.hpp"
#include "url_lens/pipeline/report.hpp"
#include "url_lens/pipeline/run_config.hpp"
#include "url_lens/pipeline/stages.hpp"

using namespace url_lens;
using namespace url_lens::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

StageRecord done(const std::string& hash) {
  StageRecord r;
  r.status = StageStatus::complete;
  r.config_hash = hash;
  return r;
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad values") {
  CHECK_NOTHROW(parse_config(nlohmann::json::object()));
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"training", {{"total_stepz", 10}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"agents", {"sac"}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(nlohmann::json{{"training", {{"total_steps", "many"}}}}), ConfigError);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"full.json", "desk.json", "tiny.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(fs::path(URL_LENS_CONFIG_DIR) / name));
  }
}

TEST_CASE("config hash ignores the output directory only") {
  RunConfig a;
  RunConfig b = a;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.training.learning_rate *= 2;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(to_json(a).contains("output_dir"));
}

TEST_CASE("canonical JSON parses back to the same hash") {
  const auto a = load_config(fs::path(URL_LENS_CONFIG_DIR) / "tiny.json");
  const auto b = parse_config(nlohmann::json::parse(to_json(a).dump()));
  CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("stage keys") {
  CHECK(stage_key(Stage::train, 0, "dqn") == "seed_0/dqn/train");
  CHECK(stage_key(Stage::metrics, 3) == "seed_3/metrics");
  CHECK(stage_key(Stage::report) == "report");
}

TEST_CASE("manifest freshness follows hash, artifacts and upstream generations") {
  const auto dir = scratch("url_lens_manifest_test");
  std::ofstream(dir / "a.bin") << "x";
  {
    Manifest m(dir);
    auto up = done("h");
    up.artifacts = {"a.bin"};
    m.record("up", up, {});
    m.record("down", done("h"), {"up"});
    CHECK(m.is_fresh("up", "h", {}));
    CHECK(m.is_fresh("down", "h", {"up"}));
    CHECK_FALSE(m.is_fresh("down", "other", {"up"}));
  }
  {
    Manifest m(dir);  // reloaded from disk
    CHECK(m.is_fresh("down", "h", {"up"}));
    auto up = done("h");
    up.artifacts = {"a.bin"};
    m.record("up", up, {});
    CHECK(m.is_fresh("up", "h", {}));
    CHECK_FALSE(m.is_fresh("down", "h", {"up"}));
    m.record("down", done("h"), {"up"});
    CHECK(m.is_fresh("down", "h", {"up"}));
    fs::remove(dir / "a.bin");
    CHECK_FALSE(m.is_fresh("up", "h", {}));
    const long g = m.generation("down");
    m.mark("down", StageStatus::failed, "h", "boom");
    CHECK(m.generation("down") == g);
    CHECK_FALSE(m.is_complete("down", "h"));
  }
  fs::remove_all(dir);
}

TEST_CASE("median skips non-finite values") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(median({1, std::numeric_limits<double>::quiet_NaN(), 5}) == 3.0);
  CHECK(std::isnan(median({})));
}

TEST_CASE("table1 marks absent agents and fields as missing") {
  nlohmann::ordered_json s;
  s["dqn"]["coverage_pct"]["median"] = 12.5;
  s["dqn"]["trajectory_entropy"]["median"] = 2.0;
  s["dqn"]["silhouette"]["median"] = 0.25;
  const auto csv = table1_csv(s, {agents::AgentKind::dqn, agents::AgentKind::rnd}, "abc", "median");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# config_hash=abc");
  std::getline(in, line);
  CHECK(line == "Agent,Coverage (%),Entropy,Silhouette,Davies-Bouldin");
  std::getline(in, line);
  CHECK(line.rfind("DQN,12.5", 0) == 0);
  CHECK(line.substr(line.rfind(',') + 1) == "missing");
  std::getline(in, line);
  CHECK(line == "RND,missing,missing,missing,missing");
}

TEST_CASE("frame files round-trip") {
  const auto dir = scratch("url_lens_frames_test");
  std::vector<procenv::Observation> frames(3);
  for (std::size_t i = 0; i < frames.size(); ++i)
    for (std::size_t j = 0; j < frames[i].pixels.size(); ++j) frames[i].pixels[j] = static_cast<std::uint8_t>((i * 31 + j) % 251);
  write_frames(dir / "f.u8", frames, "h");
  CHECK(read_frames(dir / "f.u8") == frames);
  fs::remove_all(dir);
}

TEST_CASE("CLI exits with 2 on a config error") {
  const auto dir = scratch("url_lens_cli_test");
  std::ofstream(dir / "bad.json") << R"({"agents": ["dqn"], "nonsense": true})";
  const std::string cmd = std::string(URL_LENS_CLI) + " train --config " + (dir / "bad.json").string() + " --out " +
                          (dir / "out").string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
  fs::remove_all(dir);
}
