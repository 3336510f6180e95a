#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace tal::dataset {

struct ActionInstance {
  int label = 0;
  double t_start = 0.0;  // seconds
  double t_end = 0.0;

  bool operator==(const ActionInstance&) const = default;
};

// One video: unit-level feature matrix plus ground truth. A unit is
// unit_length consecutive frames; features has one row per unit.
struct VideoRecord {
  std::string video_id;
  double fps = 16.0;
  int unit_length = 16;
  Matrix features;  // T x D
  std::vector<ActionInstance> annotations;

  int num_units() const { return features.rows(); }
  int feature_dim() const { return features.cols(); }
  double unit_duration() const { return unit_length / fps; }
  double duration() const { return num_units() * unit_duration(); }

  // Throws SchemaError when an invariant fails (used by parse and synth).
  void validate() const;

  bool operator==(const VideoRecord&) const = default;
};

// Per-unit binary training targets for the three probability channels.
struct UnitTargets {
  std::vector<uint8_t> start;
  std::vector<uint8_t> end;
  std::vector<uint8_t> action;

  bool operator==(const UnitTargets&) const = default;
};

enum class BoundaryOffsetMode { kCentered, kOffCenter };

struct SynthConfig {
  int num_videos = 20;
  int num_classes = 2;
  int feature_dim = 32;
  int min_units = 80;
  int max_units = 120;
  double fps = 16.0;
  int unit_length = 16;
  int min_actions = 1;
  int max_actions = 2;
  int min_action_units = 3;  // planted span length, in units
  int max_action_units = 8;
  double class_mean_separation = 1.0;
  double noise_sigma = 0.1;
  BoundaryOffsetMode boundary_offset_mode = BoundaryOffsetMode::kOffCenter;
  uint64_t seed = 1;
  std::string id_prefix = "v";
};

// Deterministic per-class feature mean used by the generator.
Vec class_mean(int label, int num_classes, int feature_dim, double separation);

// Newline-delimited JSON records; see README for the exact schema.
std::vector<VideoRecord> parse_dataset(const std::filesystem::path& path);
void serialize_dataset(const std::vector<VideoRecord>& records,
                       const std::filesystem::path& path);

std::vector<VideoRecord> synth_generate(const SynthConfig& cfg);

// Boundary targets widened by +/- expansion_ratio unit durations; action
// targets set where the annotation covers more than half the unit.
UnitTargets assign_unit_targets(const VideoRecord& video, double expansion_ratio);

struct WindowSample {
  Matrix features;      // window x D, zero padded past valid_len
  UnitTargets targets;  // window entries, zeros past valid_len
  int valid_len = 0;    // units [valid_len, window) are padding
  int offset = 0;       // first source unit of the slice
};

WindowSample window_sample(const VideoRecord& video, const UnitTargets& targets,
                           int window, std::mt19937_64& rng);

}  // namespace tal::dataset
