#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "metrics/metrics.hpp"
#include "pipeline/config.hpp"

namespace tal::pipeline {

// Stage orchestration over a single-writer workspace directory. Every
// artifact is recorded in manifest.json together with the hash of the
// configuration slice that produced it; consuming stages refuse stale
// artifacts unless forced.
class Pipeline {
 public:
  Pipeline(std::filesystem::path config_path, std::filesystem::path workspace);

  void set_seed_override(uint64_t seed) { seed_override_ = seed; }
  void set_force(bool force) { force_ = force; }

  // stage: synth | train-prob | propose | train-rank | rank | eval | all
  void run(const std::string& stage);

  // Side-by-side comparison tables over every eval report in the workspace.
  std::string report() const;

  static const std::vector<std::string>& stage_names();

 private:
  struct Context;

  void run_synth(Context& ctx);
  void run_train_prob(Context& ctx);
  void run_propose(Context& ctx);
  void run_train_rank(Context& ctx);
  void run_rank(Context& ctx);
  void run_eval(Context& ctx);

  PipelineConfig load_effective_config() const;
  void require_artifact(const std::string& name, const std::string& expected_hash,
                        const std::string& producer_stage) const;
  void record_artifact(const std::string& name, const std::string& hash) const;

  std::filesystem::path config_path_;
  std::filesystem::path workspace_;
  std::optional<uint64_t> seed_override_;
  bool force_ = false;
};

// Machine-readable eval tables (also what `report` consumes).
struct EvalTables {
  std::vector<std::pair<int, double>> ar_at_an;
  std::vector<std::pair<double, double>> recall_at_100;
  std::vector<std::pair<double, double>> map_at_iou;
};

void write_eval_tsv(const metrics::EvalReport& report, const std::filesystem::path& path);
void write_eval_txt(const metrics::EvalReport& report, const std::string& tag,
                    const std::filesystem::path& path);
void write_ar_curve_svg(const metrics::EvalReport& report, const std::filesystem::path& path);
EvalTables read_eval_tsv(const std::filesystem::path& path);

}  // namespace tal::pipeline
