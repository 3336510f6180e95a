#pragma once

#include <cstdint>
#include <vector>

#include "dataset/dataset.hpp"
#include "network/model.hpp"

namespace tal::network {

struct TrainConfig {
  int hidden_size = 513;
  int num_layers = 2;
  int k_steps = 4;
  int epochs = 20;
  int batch_size = 32;
  int window = 100;
  double learning_rate = 1e-3;
  double decay_factor = 0.1;
  int decay_epoch = 10;  // epochs [decay_epoch, ...) use lr * decay_factor
  double l2_lambda = 1e-4;
  double beta = 2.0;
  double dropout = 0.3;
  double expansion_ratio = 0.5;
  uint64_t seed = 1;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;
};

TrainResult train_probability_model(const std::vector<dataset::VideoRecord>& videos,
                                    const TrainConfig& cfg);

}  // namespace tal::network
