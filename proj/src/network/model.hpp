#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "core/matrix.hpp"
#include "dataset/dataset.hpp"

namespace tal::network {

// One stacked recurrent layer. Gate recurrence (Cho-style, fixed so the
// hand-derived gradients are checkable):
//   z = sigmoid(Wz x + Uz h_prev + bz)
//   r = sigmoid(Wr x + Ur h_prev + br)
//   hcand = tanh(Wh x + Uh (r . h_prev) + bh)
//   h = (1 - z) . h_prev + z . hcand
struct GruLayerParams {
  Matrix Wz, Wr, Wh;  // H x D_in
  Matrix Uz, Ur, Uh;  // H x H
  Vec bz, br, bh;     // H

  int hidden() const { return Wz.rows(); }
  int input_dim() const { return Wz.cols(); }
};

// Three affine heads, each fed one contiguous third of the top hidden state
// and emitting K per-step probabilities through a logistic.
struct SplitHeadParams {
  Matrix Astart, Aend, Aaction;  // K x (H/3)
  Vec bstart, bend, baction;     // K

  int k_steps() const { return Astart.rows(); }
};

struct ModelParams {
  std::vector<GruLayerParams> layers;
  SplitHeadParams head;

  int input_dim() const { return layers.front().input_dim(); }
  int hidden() const { return layers.front().hidden(); }
  int k_steps() const { return head.k_steps(); }
};

// Flat view over every tensor of a parameter set; weights and biases are
// distinguished so L2 touches only weights.
struct TensorRef {
  double* data;
  size_t size;
  bool is_weight;
};
std::vector<TensorRef> collect_tensors(ModelParams& p);
size_t parameter_count(const ModelParams& p);

struct AdamState {
  ModelParams m, v;  // shaped like the parameters, zero initialised
  long long step = 0;
};

// Entry [t][k] is the probability predicted at step t for unit t-k;
// cells with t-k < 0 are structurally invalid and excluded everywhere.
struct ProbabilityGrid {
  Matrix start, end, action;  // T x K

  int steps() const { return start.rows(); }
  int k_steps() const { return start.cols(); }
  bool valid(int t, int k) const { return t - k >= 0; }
};

struct GruStepCache {
  Vec x;      // input actually fed (post dropout for stacked layers)
  Vec z, r, hcand, h;
};

struct ForwardCache {
  // [layer][t]
  std::vector<std::vector<GruStepCache>> steps;
  // dropout masks applied to layer l-1's output before layer l; empty when
  // not training or rate == 0
  std::vector<Matrix> dropout_masks;
  int t = 0;
};

ModelParams init_model(int input_dim, int hidden, int num_layers, int k_steps,
                       std::mt19937_64& rng);
AdamState init_adam(const ModelParams& p);

// h_next plus the cached activations backward needs.
GruStepCache gru_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                              const GruLayerParams& p);

std::pair<ProbabilityGrid, ForwardCache> model_forward(const Matrix& features,
                                                       const ModelParams& params,
                                                       double dropout_rate, bool training,
                                                       std::mt19937_64& rng);

struct LossGrads {
  double loss = 0.0;
  Matrix dstart, dend, daction;  // d loss / d pre-sigmoid logits, T x K
};

// Per-channel weighted binary cross entropy averaged over valid cells.
// Cells at steps >= valid_len (window padding) are ignored.
LossGrads weighted_bce_loss(const ProbabilityGrid& grid, const dataset::UnitTargets& targets,
                            double beta, int valid_len);

// Exact BPTT gradients of the scalar loss, plus lambda * theta on weights.
// Accumulates into `grads` (callers zero it between batches).
void model_backward(const Matrix& features, const ForwardCache& cache, const LossGrads& dl,
                    const ModelParams& params, double lambda, ModelParams& grads);

ModelParams zeros_like(const ModelParams& p);
void scale_params(ModelParams& p, double s);

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// 0.5 * lambda * sum(theta^2) over weights; the regularisation term whose
// gradient model_backward adds. Exposed so finite-difference oracles can
// evaluate the exact objective.
double l2_penalty(const ModelParams& p, double lambda);

struct ModelHyperparams {
  int input_dim = 32;
  int hidden_size = 513;
  int num_layers = 2;
  int k_steps = 4;
};

void save_model(const ModelParams& params, const ModelHyperparams& hp,
                const std::filesystem::path& path);
std::pair<ModelParams, ModelHyperparams> load_model(const std::filesystem::path& path);

}  // namespace tal::network
