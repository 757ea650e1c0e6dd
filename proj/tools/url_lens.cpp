// url-lens: train agents, attribute, fit VAEs, compute metrics and build the report.
#include <iostream>

#include "CLI11.hpp"
#include "url_lens/agents/schedule.hpp"
#include "url_lens/pipeline/run_config.hpp"
#include "url_lens/pipeline/stages.hpp"

using namespace url_lens;
using pipeline::Stage;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"url-lens: attribution and latent-space analysis of exploration agents"};
  app.require_subcommand(1, 1);

  std::string config_path, agent, out, dump_frames;
  std::optional<std::uint64_t> seed;
  bool force = false;

  const std::pair<const char*, std::vector<Stage>> commands[] = {
      {"train", {Stage::train}},
      {"attribute", {Stage::attribute}},
      {"vae", {Stage::vae}},
      {"metrics", {Stage::metrics}},
      {"report", {Stage::report}},
      {"all", {Stage::train, Stage::attribute, Stage::vae, Stage::metrics, Stage::report}},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, stages] : commands) {
    auto* sub = app.add_subcommand(name, stages.size() > 1 ? std::string("run every stage in order")
                                                           : std::string("run the ") + name + " stage");
    sub->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--agent", agent, "restrict to one agent");
    sub->add_option("--seed", seed, "restrict to one seed");
    sub->add_option("--out", out, "override output_dir");
    sub->add_option("--dump-frames", dump_frames, "also write every acted-on frame as PNG under DIR");
    sub->add_flag("--force", force, "re-run stages even when the manifest says they are fresh");
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  std::vector<Stage> stages;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) stages = commands[i].second;
  }

  pipeline::RunConfig config;
  pipeline::Selection selection;
  try {
    config = pipeline::load_config(config_path);
    if (!out.empty()) config.output_dir = out;
    if (!agent.empty()) selection.agent = agents::parse_agent(agent);
    selection.seed = seed;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  auto options = pipeline::options_from_environment();
  options.force = force;
  if (!dump_frames.empty()) options.dump_frames = dump_frames;
  try {
    pipeline::Pipeline p(config, options);
    const bool ok = p.run(stages, selection);
    return ok ? 0 : kExitStage;
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
}
