// CLI driver; everything happens behind the shared library's C API.

#include <CLI11.hpp>
#include <cstdio>
#include <memory>
#include <string>

#include "tal/tal.h"

namespace {

struct PipelineDeleter {
  void operator()(tal_pipeline* p) const { tal_pipeline_destroy(p); }
};
using PipelineHandle = std::unique_ptr<tal_pipeline, PipelineDeleter>;

int run_stage(const std::string& config, const std::string& workspace, bool has_seed,
              unsigned long long seed, bool force, const std::string& stage) {
  tal_pipeline* raw = nullptr;
  tal_status st = tal_pipeline_create(config.empty() ? nullptr : config.c_str(),
                                      workspace.c_str(), &raw);
  if (st != TAL_OK) {
    std::fprintf(stderr, "error: could not open pipeline\n");
    return st;
  }
  PipelineHandle handle(raw);
  if (has_seed) tal_pipeline_set_seed(handle.get(), seed);
  tal_pipeline_set_force(handle.get(), force ? 1 : 0);

  if (stage == "report") {
    char* text = nullptr;
    st = tal_pipeline_report(handle.get(), &text);
    if (st == TAL_OK && text) {
      std::fputs(text, stdout);
      tal_free(text);
      return 0;
    }
  } else {
    st = tal_pipeline_run(handle.get(), stage.c_str());
    if (st == TAL_OK) {
      std::printf("%s: ok\n", stage.c_str());
      return 0;
    }
  }
  std::fprintf(stderr, "error: %s\n", tal_pipeline_last_error(handle.get()));
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal action localization pipeline"};
  app.set_version_flag("--version", tal_version());
  app.require_subcommand(1);

  std::string config, workspace, run_target;
  unsigned long long seed = 0;
  bool force = false;
  bool has_seed = false;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* copt = cmd->add_option("--config", config, "pipeline config file (JSON)");
    if (config_required) copt->required();
    cmd->add_option("--workspace", workspace, "workspace directory")->required();
    cmd->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { has_seed = true; });
    cmd->add_flag("--force", force, "consume artifacts even if their config hash mismatches");
  };

  const char* stages[] = {"synth", "train-prob", "propose", "train-rank", "rank", "eval"};
  for (const char* name : stages) add_common(app.add_subcommand(name), true);
  add_common(app.add_subcommand("report", "compare eval reports in a workspace"), false);
  auto* run_cmd = app.add_subcommand("run", "run one stage or 'all'");
  run_cmd->add_option("stage", run_target, "stage name or 'all'")->required();
  add_common(run_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : TAL_CONFIG_ERROR;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  const std::string stage = sub == "run" ? run_target : sub;
  return run_stage(config, workspace, has_seed, seed, force, stage);
}
