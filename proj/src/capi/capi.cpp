#include "tal/tal.h"

#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>

#include "core/error.hpp"
#include "pipeline/pipeline.hpp"

struct tal_pipeline {
  std::string config_path;
  std::string workspace;
  bool has_seed = false;
  unsigned long long seed = 0;
  bool force = false;
  std::string last_error;
};

namespace {

tal_status run_guarded(tal_pipeline* p, const std::function<void(tal::pipeline::Pipeline&)>& fn) {
  if (!p) return TAL_ERROR;
  p->last_error.clear();
  try {
    tal::pipeline::Pipeline pipe(p->config_path, p->workspace);
    if (p->has_seed) pipe.set_seed_override(p->seed);
    pipe.set_force(p->force);
    fn(pipe);
    return TAL_OK;
  } catch (const tal::ConfigError& e) {
    p->last_error = e.what();
    return TAL_CONFIG_ERROR;
  } catch (const tal::MissingArtifactError& e) {
    p->last_error = e.what();
    return TAL_MISSING_ARTIFACT;
  } catch (const tal::NumericError& e) {
    p->last_error = e.what();
    return TAL_NUMERIC_ERROR;
  } catch (const std::exception& e) {
    p->last_error = e.what();
    return TAL_ERROR;
  }
}

}  // namespace

extern "C" {

tal_status tal_pipeline_create(const char* config_path, const char* workspace_dir,
                               tal_pipeline** out) {
  if (!out || !workspace_dir || !*workspace_dir) return TAL_CONFIG_ERROR;
  auto* p = new (std::nothrow) tal_pipeline;
  if (!p) return TAL_ERROR;
  p->config_path = config_path ? config_path : "";
  p->workspace = workspace_dir;
  *out = p;
  return TAL_OK;
}

void tal_pipeline_destroy(tal_pipeline* p) { delete p; }

tal_status tal_pipeline_set_seed(tal_pipeline* p, unsigned long long seed) {
  if (!p) return TAL_ERROR;
  p->has_seed = true;
  p->seed = seed;
  return TAL_OK;
}

tal_status tal_pipeline_set_force(tal_pipeline* p, int force) {
  if (!p) return TAL_ERROR;
  p->force = force != 0;
  return TAL_OK;
}

tal_status tal_pipeline_run(tal_pipeline* p, const char* stage) {
  if (!stage) {
    if (p) p->last_error = "stage name is required";
    return TAL_CONFIG_ERROR;
  }
  const std::string stage_name = stage;
  return run_guarded(p, [&](tal::pipeline::Pipeline& pipe) { pipe.run(stage_name); });
}

tal_status tal_pipeline_report(tal_pipeline* p, char** out_text) {
  if (!out_text) {
    if (p) p->last_error = "out_text must be non-null";
    return TAL_CONFIG_ERROR;
  }
  *out_text = nullptr;
  return run_guarded(p, [&](tal::pipeline::Pipeline& pipe) {
    const std::string text = pipe.report();
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw tal::Error("out of memory");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_text = buf;
  });
}

const char* tal_pipeline_last_error(const tal_pipeline* p) {
  return p ? p->last_error.c_str() : "";
}

void tal_free(char* ptr) { std::free(ptr); }

const char* tal_version(void) { return "0.1.0"; }

}  // extern "C"
