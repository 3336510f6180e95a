#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace tal::metrics {

double interval_iou(const Interval& a, const Interval& b) {
  const double inter = std::min(a.e, b.e) - std::max(a.s, b.s);
  if (inter <= 0.0) return 0.0;
  const double uni = (a.e - a.s) + (b.e - b.s) - inter;
  return inter / uni;
}

double recall_at(const std::vector<RecallVideo>& videos, int an, double tiou) {
  long long total = 0;
  long long recalled = 0;
  for (const auto& v : videos) {
    total += static_cast<long long>(v.ground_truth.size());
    const int keep = std::min<int>(an, static_cast<int>(v.proposals.size()));
    for (const auto& gt : v.ground_truth) {
      for (int i = 0; i < keep; ++i) {
        if (interval_iou(v.proposals[i], gt) >= tiou) {
          ++recalled;
          break;
        }
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(recalled) / static_cast<double>(total);
}

double average_recall(const std::vector<RecallVideo>& videos, int an,
                      const std::vector<double>& tiou_grid) {
  if (tiou_grid.empty()) return 0.0;
  double sum = 0.0;
  for (double t : tiou_grid) sum += recall_at(videos, an, t);
  return sum / static_cast<double>(tiou_grid.size());
}

ApResult map_at(const std::vector<Detection>& detections,
                const std::vector<std::vector<LabeledInstance>>& ground_truth,
                double iou_threshold) {
  // classes with at least one ground-truth instance
  std::map<int, int> gt_count;
  for (const auto& video : ground_truth)
    for (const auto& inst : video) ++gt_count[inst.label];

  ApResult result;
  for (const auto& [cls, npos] : gt_count) {
    std::vector<int> det_idx;
    for (int i = 0; i < static_cast<int>(detections.size()); ++i)
      if (detections[i].label == cls) det_idx.push_back(i);
    std::ranges::stable_sort(det_idx, [&](int a, int b) {
      return detections[a].score > detections[b].score;
    });

    std::vector<std::vector<bool>> matched(ground_truth.size());
    for (size_t v = 0; v < ground_truth.size(); ++v)
      matched[v].assign(ground_truth[v].size(), false);

    std::vector<double> precision, recall;
    int tp = 0, fp = 0;
    for (int idx : det_idx) {
      const auto& det = detections[idx];
      int best_gt = -1;
      double best_iou = 0.0;
      const auto& gts = ground_truth[det.video];
      for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
        if (gts[g].label != cls || matched[det.video][g]) continue;
        const double iou = interval_iou(det.interval, gts[g].interval);
        if (iou >= iou_threshold && iou > best_iou) {
          best_iou = iou;
          best_gt = g;
        }
      }
      if (best_gt >= 0) {
        matched[det.video][best_gt] = true;
        ++tp;
      } else {
        ++fp;
      }
      precision.push_back(static_cast<double>(tp) / (tp + fp));
      recall.push_back(static_cast<double>(tp) / npos);
    }

    // All-points interpolation: running max of precision from the right,
    // summed over recall increments.
    double ap = 0.0;
    double env = 0.0;
    for (int i = static_cast<int>(precision.size()) - 1; i >= 0; --i) {
      env = std::max(env, precision[i]);
      const double r_prev = i > 0 ? recall[i - 1] : 0.0;
      ap += (recall[i] - r_prev) * env;
    }
    result.per_class[cls] = ap;
  }

  if (!result.per_class.empty()) {
    double sum = 0.0;
    for (const auto& [cls, ap] : result.per_class) sum += ap;
    result.map = sum / static_cast<double>(result.per_class.size());
  }
  return result;
}

std::vector<double> MetricsConfig::ar_tiou_grid() const {
  std::vector<double> grid;
  const int points = ar_tiou_include_one ? 11 : 10;
  for (int i = 0; i < points; ++i) grid.push_back(0.5 + 0.05 * i);
  return grid;
}

EvalReport evaluate(const std::vector<EvalVideo>& videos, const MetricsConfig& cfg) {
  EvalReport report;

  std::vector<RecallVideo> recall_videos;
  recall_videos.reserve(videos.size());
  for (const auto& v : videos) {
    RecallVideo rv;
    rv.proposals = v.proposals;
    for (const auto& gt : v.ground_truth) rv.ground_truth.push_back(gt.interval);
    recall_videos.push_back(std::move(rv));
  }

  const auto ar_grid = cfg.ar_tiou_grid();
  for (int an : cfg.an_grid)
    report.ar_at_an[an] = average_recall(recall_videos, an, ar_grid);
  for (double t : cfg.recall_tiou_grid)
    report.recall_at_100[t] = recall_at(recall_videos, 100, t);

  bool any_label = false;
  for (const auto& v : videos)
    for (int l : v.labels)
      if (l >= 0) any_label = true;
  if (!any_label) return report;

  std::vector<Detection> detections;
  std::vector<std::vector<LabeledInstance>> gt(videos.size());
  for (int vi = 0; vi < static_cast<int>(videos.size()); ++vi) {
    const auto& v = videos[vi];
    gt[vi] = v.ground_truth;
    for (size_t i = 0; i < v.proposals.size(); ++i) {
      if (v.labels[i] < 0) continue;  // no label source for this detection
      detections.push_back({v.proposals[i], v.labels[i], v.scores[i], vi});
    }
  }
  for (double iou : cfg.map_iou_grid) {
    auto ap = map_at(detections, gt, iou);
    report.map_at_iou[iou] = ap.map;
    report.per_class_ap[iou] = std::move(ap.per_class);
  }
  return report;
}

}  // namespace tal::metrics
