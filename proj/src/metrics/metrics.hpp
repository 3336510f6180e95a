#pragma once

#include <map>
#include <string>
#include <vector>

namespace tal::metrics {

struct Interval {
  double s = 0.0;
  double e = 0.0;
};

double interval_iou(const Interval& a, const Interval& b);

// One video's proposals (descending score) and ground truth for recall.
struct RecallVideo {
  std::vector<Interval> proposals;  // sorted by descending final score
  std::vector<Interval> ground_truth;
};

double recall_at(const std::vector<RecallVideo>& videos, int an, double tiou);

// Mean of recall_at over the tIoU grid; an is the uniform per-video budget.
double average_recall(const std::vector<RecallVideo>& videos, int an,
                      const std::vector<double>& tiou_grid);

struct Detection {
  Interval interval;
  int label = 0;
  double score = 0.0;
  int video = 0;  // index into the ground-truth table
};

struct LabeledInstance {
  Interval interval;
  int label = 0;
};

struct ApResult {
  double map = 0.0;
  std::map<int, double> per_class;  // classes with >= 1 ground-truth instance
};

// All-points interpolated AP (precision envelope), greedy best-IoU matching.
ApResult map_at(const std::vector<Detection>& detections,
                const std::vector<std::vector<LabeledInstance>>& ground_truth,
                double iou_threshold);

struct EvalReport {
  std::map<int, double> ar_at_an;
  std::map<double, double> recall_at_100;
  std::map<double, double> map_at_iou;  // empty when labels are unavailable
  std::map<double, std::map<int, double>> per_class_ap;
};

struct MetricsConfig {
  std::vector<int> an_grid = {50, 100, 200, 300, 400};
  std::vector<double> recall_tiou_grid = {0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> map_iou_grid = {0.3, 0.4, 0.5, 0.6, 0.7};
  bool ar_tiou_include_one = false;  // 11-point grid instead of 0.5:0.05:0.95

  std::vector<double> ar_tiou_grid() const;
};

// A scored, optionally labelled detection for one video of the corpus.
struct EvalVideo {
  std::string video_id;
  std::vector<Interval> proposals;       // descending score order
  std::vector<double> scores;            // parallel to proposals
  std::vector<int> labels;               // parallel; -1 = unlabelled
  std::vector<LabeledInstance> ground_truth;
};

EvalReport evaluate(const std::vector<EvalVideo>& videos, const MetricsConfig& cfg);

}  // namespace tal::metrics
