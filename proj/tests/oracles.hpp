// Test-only oracles, kept independent of the implementation paths they
// check: finite-difference gradients and brute-force metric evaluation.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dataset/dataset.hpp"
#include "metrics/metrics.hpp"
#include "network/model.hpp"

namespace tal::oracle {

inline double rel_error(double a, double b) {
  const double diff = std::abs(a - b);
  if (diff < 1e-9) return 0.0;
  return diff / std::max({std::abs(a), std::abs(b), 1e-8});
}

// ---------------------------------------------------------------------------
// finite differences for the probability model
// ---------------------------------------------------------------------------

struct TinyProblem {
  network::ModelParams params;
  Matrix features;
  dataset::UnitTargets targets;
  double beta = 1.5;
  double lambda = 1e-3;
};

inline TinyProblem make_tiny_problem(std::mt19937_64& rng, int d, int hidden, int k, int t,
                                     int layers = 2) {
  TinyProblem p;
  p.params = network::init_model(d, hidden, layers, k, rng);
  // break the zero-bias symmetry so bias gradients are generic
  std::uniform_real_distribution<double> bias(-0.3, 0.3);
  for (auto& tensor : network::collect_tensors(p.params)) {
    if (!tensor.is_weight)
      for (size_t i = 0; i < tensor.size; ++i) tensor.data[i] = bias(rng);
  }
  p.features = Matrix(t, d);
  std::uniform_real_distribution<double> feat(-1.0, 1.0);
  for (auto& v : p.features.data()) v = feat(rng);
  std::bernoulli_distribution coin(0.4);
  p.targets.start.resize(t);
  p.targets.end.resize(t);
  p.targets.action.resize(t);
  for (int i = 0; i < t; ++i) {
    p.targets.start[i] = coin(rng);
    p.targets.end[i] = coin(rng);
    p.targets.action[i] = coin(rng);
  }
  return p;
}

inline double model_objective(const TinyProblem& p) {
  std::mt19937_64 unused(0);
  auto [grid, cache] = network::model_forward(p.features, p.params, 0.0, true, unused);
  auto dl = network::weighted_bce_loss(grid, p.targets, p.beta, p.features.rows());
  return dl.loss + network::l2_penalty(p.params, p.lambda);
}

// Max relative error between analytic BPTT gradients and central finite
// differences over every parameter.
inline double max_gradient_error(TinyProblem& p, double step = 1e-5) {
  std::mt19937_64 unused(0);
  auto [grid, cache] = network::model_forward(p.features, p.params, 0.0, true, unused);
  auto dl = network::weighted_bce_loss(grid, p.targets, p.beta, p.features.rows());
  auto grads = network::zeros_like(p.params);
  network::model_backward(p.features, cache, dl, p.params, p.lambda, grads);

  auto param_refs = network::collect_tensors(p.params);
  auto grad_refs = network::collect_tensors(grads);
  double worst = 0.0;
  for (size_t ti = 0; ti < param_refs.size(); ++ti) {
    for (size_t i = 0; i < param_refs[ti].size; ++i) {
      double& theta = param_refs[ti].data[i];
      const double saved = theta;
      theta = saved + step;
      const double up = model_objective(p);
      theta = saved - step;
      const double down = model_objective(p);
      theta = saved;
      const double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, rel_error(grad_refs[ti].data[i], fd));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// brute-force metric oracles
// ---------------------------------------------------------------------------

inline double brute_interval_iou(metrics::Interval a, metrics::Interval b) {
  const double lo = std::max(a.s, b.s);
  const double hi = std::min(a.e, b.e);
  const double inter = hi > lo ? hi - lo : 0.0;
  const double len_a = a.e - a.s;
  const double len_b = b.e - b.s;
  return inter <= 0.0 ? 0.0 : inter / (len_a + len_b - inter);
}

inline double brute_recall_at(const std::vector<metrics::RecallVideo>& videos, int an,
                              double tiou) {
  int total = 0, hit = 0;
  for (const auto& v : videos) {
    for (const auto& gt : v.ground_truth) {
      ++total;
      bool found = false;
      for (size_t i = 0; i < v.proposals.size() && i < static_cast<size_t>(an); ++i) {
        if (brute_interval_iou(v.proposals[i], gt) >= tiou) found = true;
      }
      if (found) ++hit;
    }
  }
  return total == 0 ? 0.0 : double(hit) / total;
}

inline double brute_average_recall(const std::vector<metrics::RecallVideo>& videos, int an,
                                   const std::vector<double>& grid) {
  double acc = 0.0;
  for (double t : grid) acc += brute_recall_at(videos, an, t);
  return grid.empty() ? 0.0 : acc / grid.size();
}

// AP by explicit precision-envelope evaluation at every recall point,
// O(n^2) on purpose.
inline double brute_ap(const std::vector<metrics::Detection>& dets_in,
                       const std::vector<std::vector<metrics::LabeledInstance>>& gt, int cls,
                       double thr) {
  std::vector<metrics::Detection> dets;
  for (const auto& d : dets_in)
    if (d.label == cls) dets.push_back(d);
  std::stable_sort(dets.begin(), dets.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });

  int npos = 0;
  for (const auto& video : gt)
    for (const auto& inst : video)
      if (inst.label == cls) ++npos;
  if (npos == 0) return 0.0;

  std::vector<std::vector<bool>> used(gt.size());
  for (size_t v = 0; v < gt.size(); ++v) used[v].assign(gt[v].size(), false);
  std::vector<bool> is_tp(dets.size(), false);
  for (size_t i = 0; i < dets.size(); ++i) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gt[dets[i].video].size(); ++g) {
      const auto& inst = gt[dets[i].video][g];
      if (inst.label != cls || used[dets[i].video][g]) continue;
      const double iou = brute_interval_iou(dets[i].interval, inst.interval);
      if (iou >= thr && iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[dets[i].video][best] = true;
      is_tp[i] = true;
    }
  }

  std::vector<double> prec(dets.size()), rec(dets.size());
  int tp = 0;
  for (size_t i = 0; i < dets.size(); ++i) {
    if (is_tp[i]) ++tp;
    prec[i] = double(tp) / double(i + 1);
    rec[i] = double(tp) / npos;
  }
  double ap = 0.0;
  for (size_t i = 0; i < dets.size(); ++i) {
    const double r_prev = i == 0 ? 0.0 : rec[i - 1];
    if (rec[i] == r_prev) continue;
    double env = 0.0;
    for (size_t j = i; j < dets.size(); ++j) env = std::max(env, prec[j]);
    ap += (rec[i] - r_prev) * env;
  }
  return ap;
}

inline double brute_map(const std::vector<metrics::Detection>& dets,
                        const std::vector<std::vector<metrics::LabeledInstance>>& gt,
                        double thr) {
  std::vector<int> classes;
  for (const auto& video : gt)
    for (const auto& inst : video)
      if (std::find(classes.begin(), classes.end(), inst.label) == classes.end())
        classes.push_back(inst.label);
  if (classes.empty()) return 0.0;
  double acc = 0.0;
  for (int c : classes) acc += brute_ap(dets, gt, c, thr);
  return acc / classes.size();
}

}  // namespace tal::oracle
