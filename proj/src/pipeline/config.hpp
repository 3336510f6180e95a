#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "metrics/metrics.hpp"
#include "proposal/proposal.hpp"
#include "ranking/ranking.hpp"

namespace tal::pipeline {

// One declarative file drives every stage. Fields default to the values the
// method was published with where such values exist; everything is
// overridable per run.
struct PipelineConfig {
  uint64_t seed = 1;

  struct Dataset {
    int num_train_videos = 20;
    int num_test_videos = 10;
    int num_classes = 2;
    int feature_dim = 32;
    int min_units = 80;
    int max_units = 120;
    double fps = 16.0;
    int unit_length = 16;
    int min_actions = 1;
    int max_actions = 2;
    int min_action_units = 3;
    int max_action_units = 8;
    double class_mean_separation = 1.0;
    double noise_sigma = 0.1;
    std::string boundary_offset_mode = "off_center";  // or "centered"
    double expansion_ratio = 0.5;

    bool operator==(const Dataset&) const = default;
  } dataset;

  struct Network {
    int hidden_size = 513;
    int num_layers = 2;
    int k_steps = 4;
    double dropout = 0.3;
    double l2_lambda = 1e-4;
    double beta = 2.0;

    bool operator==(const Network&) const = default;
  } network;

  struct Training {
    int epochs = 20;
    int batch_size = 32;
    int window = 100;
    double learning_rate = 1e-3;
    double decay_factor = 0.1;
    int decay_epoch = 10;
    int ranker_epochs = 20;
    int ranker_batch_size = 256;
    double ranker_learning_rate = 1e-3;
    double ranker_decay_factor = 0.1;
    int ranker_decay_epoch = 10;

    bool operator==(const Training&) const = default;
  } training;

  struct Prop {
    int vote_count = 1;
    double vote_threshold = 0.3;
    std::string mode = "interpolated";  // or "middle"
    int max_duration_units = 0;         // 0 = unlimited

    bool operator==(const Prop&) const = default;
  } proposal;

  struct Ranker {
    std::string variant = "listwise";  // or "pointwise"
    int hidden_size = 128;
    double smooth_l1_delta = 0.1;

    bool operator==(const Ranker&) const = default;
  } ranker;

  struct Nms {
    double iou_threshold = 0.8;

    bool operator==(const Nms&) const = default;
  } nms;

  struct Metrics {
    std::vector<int> an_grid = {50, 100, 200, 300, 400};
    std::vector<double> recall_tiou_grid = {0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> map_iou_grid = {0.3, 0.4, 0.5, 0.6, 0.7};
    bool ar_tiou_include_one = false;
    std::string labels_file;  // optional per-video label override for mAP

    bool operator==(const Metrics&) const = default;
  } metrics;

  bool operator==(const PipelineConfig&) const = default;

  proposal::BoundaryMode boundary_mode() const;
  ranking::RankerVariant ranker_variant() const;
  metrics::MetricsConfig metrics_config() const;

  // Throws ConfigError on out-of-range or inconsistent values.
  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config_file(const std::filesystem::path& path);

// Per-stage configuration hashes, chained so each artifact's hash covers
// everything upstream that could change its bytes.
struct ConfigHashes {
  std::string dataset;
  std::string prob_model;
  std::string proposals;  // depends on prob_model + the proposal section
  std::string ranker;
  std::string ranked;
  std::string eval;
};
ConfigHashes config_hashes(const PipelineConfig& cfg);

}  // namespace tal::pipeline
