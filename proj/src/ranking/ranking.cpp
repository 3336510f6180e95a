#include "ranking/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/tensor_io.hpp"
#include "metrics/metrics.hpp"

namespace tal::ranking {

using nlohmann::json;

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

ProposalFeatures build_features(const proposal::Proposal& p,
                                const proposal::UnitProbSummary& summary,
                                const proposal::VideoMeta& meta, RankerVariant variant,
                                double max_video_length) {
  if (!(p.t_start < p.t_end)) throw SchemaError("build_features: degenerate proposal span");
  ProposalFeatures f;
  f.reserve(variant == RankerVariant::kListwise ? kListwiseDim : kPointwiseDim);
  const double span = p.t_end - p.t_start;
  for (const Vec* channel : {&summary.avg_start, &summary.avg_end, &summary.avg_action}) {
    for (int i = 0; i < kSamplesPerChannel; ++i) {
      const double t = p.t_start + span * i / (kSamplesPerChannel - 1);
      f.push_back(proposal::interp_at(*channel, t * meta.fps, meta.unit_length));
    }
  }
  if (variant == RankerVariant::kListwise) {
    if (max_video_length <= 0.0)
      throw ConfigError("listwise features require a positive max_video_length");
    const double duration = summary.num_units() * meta.unit_length / meta.fps;
    f.push_back(std::min(1.0, duration / max_video_length));
  }
  return f;
}

OverlapLabel overlap_label(const proposal::Proposal& p,
                           const std::vector<dataset::ActionInstance>& annotations) {
  OverlapLabel lbl;
  for (const auto& a : annotations) {
    lbl.g = std::max(lbl.g, metrics::interval_iou({p.t_start, p.t_end}, {a.t_start, a.t_end}));
  }
  const double g = lbl.g;
  if (g <= 0.2) lbl.g_tilde = 0;
  else if (g <= 0.4) lbl.g_tilde = 1;
  else if (g <= 0.6) lbl.g_tilde = 2;
  else if (g <= 0.8) lbl.g_tilde = 3;
  else if (g <= 0.9) lbl.g_tilde = 4;
  else lbl.g_tilde = 5;
  return lbl;
}

std::pair<double, double> smooth_l1(double g, double phi, double delta) {
  if (delta <= 0.0) throw ConfigError("smooth_l1 delta must be positive");
  const double x = g - phi;
  if (std::abs(x) < delta) return {0.5 * x * x / delta, -x / delta};
  return {std::abs(x) - 0.5 * delta, x > 0 ? -1.0 : 1.0};
}

std::pair<double, Vec> listnet_loss(const Vec& phi, const std::vector<int>& g_tilde) {
  const int n = static_cast<int>(phi.size());
  if (n < 1 || g_tilde.size() != phi.size())
    throw ConfigError("listnet_loss: empty or mismatched lists");

  auto softmax = [](const Vec& v) {
    Vec out(v.size());
    const double mx = *std::ranges::max_element(v);
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      out[i] = std::exp(v[i] - mx);
      sum += out[i];
    }
    for (auto& o : out) o /= sum;
    return out;
  };

  Vec g_real(g_tilde.begin(), g_tilde.end());
  const Vec g_hat = softmax(g_real);
  const Vec phi_hat = softmax(phi);

  double loss = 0.0;
  Vec dphi(n, 0.0);
  for (int i = 0; i < n; ++i) {
    loss += -g_hat[i] * std::log(std::max(phi_hat[i], 1e-12));
    dphi[i] = (phi_hat[i] - g_hat[i]) / n;
  }
  return {loss / n, dphi};
}

std::vector<network::TensorRef> ranker_tensors(RankerParams& p) {
  return {{p.W1.data().data(), p.W1.data().size(), true},
          {p.b1.data(), p.b1.size(), false},
          {p.w2.data(), p.w2.size(), true},
          {&p.b2, 1, false}};
}

RankerParams init_ranker(int input_dim, int hidden, std::mt19937_64& rng) {
  RankerParams p;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  std::uniform_real_distribution<double> d1(-s1, s1);
  p.W1 = Matrix(hidden, input_dim);
  for (auto& v : p.W1.data()) v = d1(rng);
  p.b1.assign(hidden, 0.0);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> d2(-s2, s2);
  p.w2.assign(hidden, 0.0);
  for (auto& v : p.w2) v = d2(rng);
  p.b2 = 0.0;
  return p;
}

RankerParams ranker_zeros_like(const RankerParams& p) {
  RankerParams z = p;
  for (auto& t : ranker_tensors(z)) std::fill(t.data, t.data + t.size, 0.0);
  return z;
}

RankerCache ranker_forward(const RankerParams& p, const ProposalFeatures& f) {
  if (static_cast<int>(f.size()) != p.input_dim())
    throw ConfigError("ranker_forward: feature dimension mismatch");
  RankerCache c;
  c.input = f;
  c.pre_hidden.assign(p.hidden(), 0.0);
  matvec(p.W1, f, c.pre_hidden);
  c.hidden.resize(p.hidden());
  double acc = p.b2;
  for (int i = 0; i < p.hidden(); ++i) {
    c.pre_hidden[i] += p.b1[i];
    c.hidden[i] = std::max(0.0, c.pre_hidden[i]);
    acc += p.w2[i] * c.hidden[i];
  }
  c.phi = sigmoid(acc);
  return c;
}

void ranker_backward(const RankerParams& p, const RankerCache& cache, double dphi,
                     RankerParams& grads) {
  const double da2 = dphi * cache.phi * (1.0 - cache.phi);
  grads.b2 += da2;
  Vec da1(p.hidden());
  for (int i = 0; i < p.hidden(); ++i) {
    grads.w2[i] += da2 * cache.hidden[i];
    da1[i] = cache.pre_hidden[i] > 0.0 ? da2 * p.w2[i] : 0.0;
    grads.b1[i] += da1[i];
  }
  add_outer(grads.W1, da1, cache.input);
}

void ranker_adam_step(RankerParams& params, const RankerParams& grads, RankerAdamState& state,
                      double lr, double beta1, double beta2, double eps) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  auto ps = ranker_tensors(params);
  auto gs = ranker_tensors(const_cast<RankerParams&>(grads));
  auto ms = ranker_tensors(state.m);
  auto vs = ranker_tensors(state.v);
  for (size_t i = 0; i < ps.size(); ++i) {
    for (size_t j = 0; j < ps[i].size; ++j) {
      const double g = gs[i].data[j];
      double& m = ms[i].data[j];
      double& v = vs[i].data[j];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      ps[i].data[j] -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
    }
  }
}

RankerParams train_ranker(const std::vector<std::vector<LabeledProposal>>& videos,
                          const RankerTrainConfig& cfg) {
  const int input_dim =
      cfg.variant == RankerVariant::kListwise ? kListwiseDim : kPointwiseDim;
  auto rng = make_rng(cfg.seed, "train-rank");
  RankerParams params = init_ranker(input_dim, cfg.hidden, rng);
  RankerAdamState adam;
  adam.m = ranker_zeros_like(params);
  adam.v = ranker_zeros_like(params);
  RankerParams grads = ranker_zeros_like(params);
  auto zero_grads = [&] {
    for (auto& t : ranker_tensors(grads)) std::fill(t.data, t.data + t.size, 0.0);
  };

  if (cfg.variant == RankerVariant::kPointwise) {
    std::vector<const LabeledProposal*> pool;
    for (const auto& v : videos)
      for (const auto& lp : v) pool.push_back(&lp);
    if (pool.empty()) throw ConfigError("train_ranker: no proposals to train on");

    std::vector<int> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const double lr =
          cfg.learning_rate * (epoch >= cfg.decay_epoch ? cfg.decay_factor : 1.0);
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
        const size_t end = std::min(order.size(), begin + cfg.batch_size);
        const int n = static_cast<int>(end - begin);
        zero_grads();
        for (size_t i = begin; i < end; ++i) {
          const auto& lp = *pool[order[i]];
          auto cache = ranker_forward(params, lp.features);
          auto [loss, dphi] = smooth_l1(lp.label.g, cache.phi, cfg.smooth_l1_delta);
          (void)loss;
          ranker_backward(params, cache, dphi / n, grads);
        }
        ranker_adam_step(params, grads, adam, lr);
      }
    }
    return params;
  }

  // Listwise: every video's full proposal list is one optimisation step.
  std::vector<int> order(videos.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate * (epoch >= cfg.decay_epoch ? cfg.decay_factor : 1.0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int vi : order) {
      const auto& list = videos[vi];
      if (list.empty()) continue;
      std::vector<RankerCache> caches;
      caches.reserve(list.size());
      Vec phi(list.size());
      std::vector<int> g_tilde(list.size());
      for (size_t i = 0; i < list.size(); ++i) {
        caches.push_back(ranker_forward(params, list[i].features));
        phi[i] = caches.back().phi;
        g_tilde[i] = list[i].label.g_tilde;
      }
      auto [loss, dphi] = listnet_loss(phi, g_tilde);
      (void)loss;
      zero_grads();
      for (size_t i = 0; i < list.size(); ++i)
        ranker_backward(params, caches[i], dphi[i], grads);
      ranker_adam_step(params, grads, adam, lr);
    }
  }
  return params;
}

double final_score(const proposal::Proposal& p, double phi) {
  return p.p_start_avg * p.p_end_avg * phi;
}

std::vector<proposal::Proposal> nms(const std::vector<proposal::Proposal>& proposals,
                                    double iou_threshold) {
  std::vector<int> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](int a, int b) {
    if (proposals[a].final_score != proposals[b].final_score)
      return proposals[a].final_score > proposals[b].final_score;
    if (proposals[a].t_start != proposals[b].t_start)
      return proposals[a].t_start < proposals[b].t_start;
    return a < b;
  });

  std::vector<proposal::Proposal> kept;
  std::vector<bool> suppressed(proposals.size(), false);
  for (int idx : order) {
    if (suppressed[idx]) continue;
    const auto& p = proposals[idx];
    kept.push_back(p);
    for (int other : order) {
      if (other == idx || suppressed[other]) continue;
      const double iou = metrics::interval_iou({p.t_start, p.t_end},
                                               {proposals[other].t_start,
                                                proposals[other].t_end});
      if (iou > iou_threshold) suppressed[other] = true;
    }
  }
  return kept;
}

void save_ranker(const RankerCheckpoint& ckpt, const std::filesystem::path& path) {
  json j = {{"format", "tal.checkpoint"},
            {"type", "ranker"},
            {"version", 1},
            {"variant", ckpt.variant == RankerVariant::kListwise ? "listwise" : "pointwise"},
            {"feature_dim", ckpt.params.input_dim()},
            {"hidden_size", ckpt.params.hidden()},
            {"max_video_length", ckpt.max_video_length},
            {"tensors",
             {{"W1", matrix_to_json(ckpt.params.W1)},
              {"b1", vec_to_json(ckpt.params.b1)},
              {"w2", vec_to_json(ckpt.params.w2)},
              {"b2", ckpt.params.b2}}}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write ranker checkpoint " + path.string());
  out << j.dump() << "\n";
}

RankerCheckpoint load_ranker(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("ranker checkpoint not found: " + path.string());
  json j;
  try {
    in >> j;
    if (j.at("format") != "tal.checkpoint" || j.at("type") != "ranker")
      throw ParseError("ranker checkpoint " + path.string() + ": unexpected container type");
    RankerCheckpoint ckpt;
    ckpt.variant = j.at("variant") == "listwise" ? RankerVariant::kListwise
                                                 : RankerVariant::kPointwise;
    ckpt.max_video_length = j.at("max_video_length").get<double>();
    ckpt.params.W1 = matrix_from_json(j.at("tensors").at("W1"));
    ckpt.params.b1 = vec_from_json(j.at("tensors").at("b1"));
    ckpt.params.w2 = vec_from_json(j.at("tensors").at("w2"));
    ckpt.params.b2 = j.at("tensors").at("b2").get<double>();
    return ckpt;
  } catch (const json::exception& e) {
    throw ParseError("ranker checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace tal::ranking
