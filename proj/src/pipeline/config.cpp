#include "pipeline/config.hpp"

#include <fstream>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace tal::pipeline {

using nlohmann::json;

proposal::BoundaryMode PipelineConfig::boundary_mode() const {
  if (proposal.mode == "middle") return proposal::BoundaryMode::kMiddle;
  if (proposal.mode == "interpolated") return proposal::BoundaryMode::kInterpolated;
  throw ConfigError("proposal.mode must be 'middle' or 'interpolated', got '" +
                    proposal.mode + "'");
}

ranking::RankerVariant PipelineConfig::ranker_variant() const {
  if (ranker.variant == "pointwise") return ranking::RankerVariant::kPointwise;
  if (ranker.variant == "listwise") return ranking::RankerVariant::kListwise;
  throw ConfigError("ranker.variant must be 'pointwise' or 'listwise', got '" +
                    ranker.variant + "'");
}

metrics::MetricsConfig PipelineConfig::metrics_config() const {
  metrics::MetricsConfig mc;
  mc.an_grid = metrics.an_grid;
  mc.recall_tiou_grid = metrics.recall_tiou_grid;
  mc.map_iou_grid = metrics.map_iou_grid;
  mc.ar_tiou_include_one = metrics.ar_tiou_include_one;
  return mc;
}

void PipelineConfig::validate() const {
  (void)boundary_mode();
  (void)ranker_variant();
  if (dataset.num_train_videos < 1 || dataset.num_test_videos < 0)
    throw ConfigError("dataset: need at least one training video");
  if (dataset.num_classes < 1) throw ConfigError("dataset.num_classes must be >= 1");
  if (dataset.feature_dim < 1) throw ConfigError("dataset.feature_dim must be >= 1");
  if (dataset.min_units < 1 || dataset.max_units < dataset.min_units)
    throw ConfigError("dataset: bad unit range");
  if (dataset.fps <= 0) throw ConfigError("dataset.fps must be positive");
  if (dataset.unit_length < 1) throw ConfigError("dataset.unit_length must be >= 1");
  if (dataset.expansion_ratio < 0) throw ConfigError("dataset.expansion_ratio must be >= 0");
  if (dataset.boundary_offset_mode != "centered" &&
      dataset.boundary_offset_mode != "off_center")
    throw ConfigError("dataset.boundary_offset_mode must be 'centered' or 'off_center'");
  if (network.hidden_size < 3 || network.hidden_size % 3 != 0)
    throw ConfigError("network.hidden_size must be a positive multiple of 3");
  if (network.num_layers < 1) throw ConfigError("network.num_layers must be >= 1");
  if (network.k_steps < 1) throw ConfigError("network.k_steps must be >= 1");
  if (network.dropout < 0 || network.dropout >= 1)
    throw ConfigError("network.dropout must be in [0,1)");
  if (network.beta <= 0) throw ConfigError("network.beta must be positive");
  if (training.epochs < 0 || training.ranker_epochs < 0)
    throw ConfigError("training: epochs must be >= 0");
  if (training.batch_size < 1 || training.ranker_batch_size < 1)
    throw ConfigError("training: batch sizes must be >= 1");
  if (training.window < 1) throw ConfigError("training.window must be >= 1");
  if (proposal.vote_count < 1) throw ConfigError("proposal.vote_count must be >= 1");
  if (proposal.vote_threshold <= 0 || proposal.vote_threshold >= 1)
    throw ConfigError("proposal.vote_threshold must be in (0,1)");
  if (ranker.hidden_size < 1) throw ConfigError("ranker.hidden_size must be >= 1");
  if (ranker.smooth_l1_delta <= 0) throw ConfigError("ranker.smooth_l1_delta must be > 0");
  if (nms.iou_threshold <= 0 || nms.iou_threshold > 1)
    throw ConfigError("nms.iou_threshold must be in (0,1]");
  if (metrics.an_grid.empty()) throw ConfigError("metrics.an_grid must be non-empty");
}

json to_json(const PipelineConfig& c) {
  return json{
      {"seed", c.seed},
      {"dataset",
       {{"num_train_videos", c.dataset.num_train_videos},
        {"num_test_videos", c.dataset.num_test_videos},
        {"num_classes", c.dataset.num_classes},
        {"feature_dim", c.dataset.feature_dim},
        {"min_units", c.dataset.min_units},
        {"max_units", c.dataset.max_units},
        {"fps", c.dataset.fps},
        {"unit_length", c.dataset.unit_length},
        {"min_actions", c.dataset.min_actions},
        {"max_actions", c.dataset.max_actions},
        {"min_action_units", c.dataset.min_action_units},
        {"max_action_units", c.dataset.max_action_units},
        {"class_mean_separation", c.dataset.class_mean_separation},
        {"noise_sigma", c.dataset.noise_sigma},
        {"boundary_offset_mode", c.dataset.boundary_offset_mode},
        {"expansion_ratio", c.dataset.expansion_ratio}}},
      {"network",
       {{"hidden_size", c.network.hidden_size},
        {"num_layers", c.network.num_layers},
        {"k_steps", c.network.k_steps},
        {"dropout", c.network.dropout},
        {"l2_lambda", c.network.l2_lambda},
        {"beta", c.network.beta}}},
      {"training",
       {{"epochs", c.training.epochs},
        {"batch_size", c.training.batch_size},
        {"window", c.training.window},
        {"learning_rate", c.training.learning_rate},
        {"decay_factor", c.training.decay_factor},
        {"decay_epoch", c.training.decay_epoch},
        {"ranker_epochs", c.training.ranker_epochs},
        {"ranker_batch_size", c.training.ranker_batch_size},
        {"ranker_learning_rate", c.training.ranker_learning_rate},
        {"ranker_decay_factor", c.training.ranker_decay_factor},
        {"ranker_decay_epoch", c.training.ranker_decay_epoch}}},
      {"proposal",
       {{"vote_count", c.proposal.vote_count},
        {"vote_threshold", c.proposal.vote_threshold},
        {"mode", c.proposal.mode},
        {"max_duration_units", c.proposal.max_duration_units}}},
      {"ranker",
       {{"variant", c.ranker.variant},
        {"hidden_size", c.ranker.hidden_size},
        {"smooth_l1_delta", c.ranker.smooth_l1_delta}}},
      {"nms", {{"iou_threshold", c.nms.iou_threshold}}},
      {"metrics",
       {{"an_grid", c.metrics.an_grid},
        {"recall_tiou_grid", c.metrics.recall_tiou_grid},
        {"map_iou_grid", c.metrics.map_iou_grid},
        {"ar_tiou_include_one", c.metrics.ar_tiou_include_one},
        {"labels_file", c.metrics.labels_file}}}};
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    maybe(j, "seed", c.seed);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      maybe(d, "num_train_videos", c.dataset.num_train_videos);
      maybe(d, "num_test_videos", c.dataset.num_test_videos);
      maybe(d, "num_classes", c.dataset.num_classes);
      maybe(d, "feature_dim", c.dataset.feature_dim);
      maybe(d, "min_units", c.dataset.min_units);
      maybe(d, "max_units", c.dataset.max_units);
      maybe(d, "fps", c.dataset.fps);
      maybe(d, "unit_length", c.dataset.unit_length);
      maybe(d, "min_actions", c.dataset.min_actions);
      maybe(d, "max_actions", c.dataset.max_actions);
      maybe(d, "min_action_units", c.dataset.min_action_units);
      maybe(d, "max_action_units", c.dataset.max_action_units);
      maybe(d, "class_mean_separation", c.dataset.class_mean_separation);
      maybe(d, "noise_sigma", c.dataset.noise_sigma);
      maybe(d, "boundary_offset_mode", c.dataset.boundary_offset_mode);
      maybe(d, "expansion_ratio", c.dataset.expansion_ratio);
    }
    if (j.contains("network")) {
      const auto& n = j.at("network");
      maybe(n, "hidden_size", c.network.hidden_size);
      maybe(n, "num_layers", c.network.num_layers);
      maybe(n, "k_steps", c.network.k_steps);
      maybe(n, "dropout", c.network.dropout);
      maybe(n, "l2_lambda", c.network.l2_lambda);
      maybe(n, "beta", c.network.beta);
    }
    if (j.contains("training")) {
      const auto& t = j.at("training");
      maybe(t, "epochs", c.training.epochs);
      maybe(t, "batch_size", c.training.batch_size);
      maybe(t, "window", c.training.window);
      maybe(t, "learning_rate", c.training.learning_rate);
      maybe(t, "decay_factor", c.training.decay_factor);
      maybe(t, "decay_epoch", c.training.decay_epoch);
      maybe(t, "ranker_epochs", c.training.ranker_epochs);
      maybe(t, "ranker_batch_size", c.training.ranker_batch_size);
      maybe(t, "ranker_learning_rate", c.training.ranker_learning_rate);
      maybe(t, "ranker_decay_factor", c.training.ranker_decay_factor);
      maybe(t, "ranker_decay_epoch", c.training.ranker_decay_epoch);
    }
    if (j.contains("proposal")) {
      const auto& p = j.at("proposal");
      maybe(p, "vote_count", c.proposal.vote_count);
      maybe(p, "vote_threshold", c.proposal.vote_threshold);
      maybe(p, "mode", c.proposal.mode);
      maybe(p, "max_duration_units", c.proposal.max_duration_units);
    }
    if (j.contains("ranker")) {
      const auto& r = j.at("ranker");
      maybe(r, "variant", c.ranker.variant);
      maybe(r, "hidden_size", c.ranker.hidden_size);
      maybe(r, "smooth_l1_delta", c.ranker.smooth_l1_delta);
    }
    if (j.contains("nms")) maybe(j.at("nms"), "iou_threshold", c.nms.iou_threshold);
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      maybe(m, "an_grid", c.metrics.an_grid);
      maybe(m, "recall_tiou_grid", c.metrics.recall_tiou_grid);
      maybe(m, "map_iou_grid", c.metrics.map_iou_grid);
      maybe(m, "ar_tiou_include_one", c.metrics.ar_tiou_include_one);
      maybe(m, "labels_file", c.metrics.labels_file);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

ConfigHashes config_hashes(const PipelineConfig& cfg) {
  const json j = to_json(cfg);
  auto hex = [](uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  };
  auto chain = [&](const std::string& prev, const json& section) {
    return hex(fnv1a(section.dump(), fnv1a(prev)));
  };

  ConfigHashes h;
  h.dataset = chain("seed:" + std::to_string(cfg.seed), j.at("dataset"));
  json prob_training = {{"epochs", cfg.training.epochs},
                        {"batch_size", cfg.training.batch_size},
                        {"window", cfg.training.window},
                        {"learning_rate", cfg.training.learning_rate},
                        {"decay_factor", cfg.training.decay_factor},
                        {"decay_epoch", cfg.training.decay_epoch}};
  h.prob_model = chain(h.dataset, json{{"network", j.at("network")}, {"training", prob_training}});
  h.proposals = chain(h.prob_model, j.at("proposal"));
  json rank_training = {{"ranker_epochs", cfg.training.ranker_epochs},
                        {"ranker_batch_size", cfg.training.ranker_batch_size},
                        {"ranker_learning_rate", cfg.training.ranker_learning_rate},
                        {"ranker_decay_factor", cfg.training.ranker_decay_factor},
                        {"ranker_decay_epoch", cfg.training.ranker_decay_epoch}};
  h.ranker = chain(h.proposals, json{{"ranker", j.at("ranker")}, {"training", rank_training}});
  h.ranked = chain(h.ranker, j.at("nms"));
  h.eval = chain(h.ranked, j.at("metrics"));
  return h;
}

}  // namespace tal::pipeline
