#include "network/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace tal::network {

TrainResult train_probability_model(const std::vector<dataset::VideoRecord>& videos,
                                    const TrainConfig& cfg) {
  if (videos.empty()) throw ConfigError("training dataset is empty");
  const int input_dim = videos.front().feature_dim();
  for (const auto& v : videos) {
    if (v.feature_dim() != input_dim)
      throw SchemaError("training videos disagree on feature dimension");
  }

  auto rng = make_rng(cfg.seed, "train-prob");
  TrainResult result;
  result.params = init_model(input_dim, cfg.hidden_size, cfg.num_layers, cfg.k_steps, rng);
  AdamState adam = init_adam(result.params);
  ModelParams grads = zeros_like(result.params);

  std::vector<dataset::UnitTargets> targets;
  targets.reserve(videos.size());
  for (const auto& v : videos) targets.push_back(assign_unit_targets(v, cfg.expansion_ratio));

  std::vector<int> order(videos.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate * (epoch >= cfg.decay_epoch ? cfg.decay_factor : 1.0);
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    int num_batches = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      const int n = static_cast<int>(end - begin);
      for (auto& t : collect_tensors(grads)) std::fill(t.data, t.data + t.size, 0.0);

      double batch_loss = 0.0;
      for (size_t i = begin; i < end; ++i) {
        const int idx = order[i];
        auto w = dataset::window_sample(videos[idx], targets[idx], cfg.window, rng);
        auto [grid, cache] = model_forward(w.features, result.params, cfg.dropout, true, rng);
        auto dl = weighted_bce_loss(grid, w.targets, cfg.beta, w.valid_len);
        if (!std::isfinite(dl.loss))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(num_batches));
        model_backward(w.features, cache, dl, result.params, cfg.l2_lambda, grads);
        batch_loss += dl.loss;
      }
      scale_params(grads, 1.0 / n);
      adam_step(result.params, grads, adam, lr);
      epoch_loss += batch_loss / n;
      ++num_batches;
    }
    result.epoch_loss.push_back(epoch_loss / std::max(1, num_batches));
  }
  return result;
}

}  // namespace tal::network
