#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "core/matrix.hpp"
#include "dataset/dataset.hpp"
#include "proposal/proposal.hpp"

namespace tal::ranking {

enum class RankerVariant { kPointwise, kListwise };

// 96 samples (32 per probability channel across the proposal span) for the
// pointwise ranker; the listwise ranker appends the normalised video length.
constexpr int kSamplesPerChannel = 32;
constexpr int kPointwiseDim = 3 * kSamplesPerChannel;
constexpr int kListwiseDim = kPointwiseDim + 1;

using ProposalFeatures = Vec;

ProposalFeatures build_features(const proposal::Proposal& p,
                                const proposal::UnitProbSummary& summary,
                                const proposal::VideoMeta& meta, RankerVariant variant,
                                double max_video_length);

struct OverlapLabel {
  double g = 0.0;   // max temporal IoU with ground truth
  int g_tilde = 0;  // bucket in {0..5}
};

OverlapLabel overlap_label(const proposal::Proposal& p,
                           const std::vector<dataset::ActionInstance>& annotations);

// Huber loss on g - phi with knee delta, and d loss / d phi.
std::pair<double, double> smooth_l1(double g, double phi, double delta = 0.1);

// ListNet-style loss: softmax-normalised buckets vs softmax-normalised
// scores, cross entropy scaled by 1/N; returns the gradient w.r.t. phi.
std::pair<double, Vec> listnet_loss(const Vec& phi, const std::vector<int>& g_tilde);

// input -> hidden (ReLU) -> 1 (logistic)
struct RankerParams {
  Matrix W1;  // hidden x input
  Vec b1;
  Vec w2;  // hidden
  double b2 = 0.0;

  int input_dim() const { return W1.cols(); }
  int hidden() const { return W1.rows(); }
};

struct RankerAdamState {
  RankerParams m, v;
  long long step = 0;
};

struct RankerCache {
  Vec input;
  Vec pre_hidden;  // W1 x + b1
  Vec hidden;      // relu
  double phi = 0.0;
};

RankerParams init_ranker(int input_dim, int hidden, std::mt19937_64& rng);
RankerParams ranker_zeros_like(const RankerParams& p);
std::vector<network::TensorRef> ranker_tensors(RankerParams& p);

RankerCache ranker_forward(const RankerParams& p, const ProposalFeatures& f);
// Accumulates gradients for one example given d loss / d phi.
void ranker_backward(const RankerParams& p, const RankerCache& cache, double dphi,
                     RankerParams& grads);
void ranker_adam_step(RankerParams& params, const RankerParams& grads, RankerAdamState& state,
                      double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct RankerTrainConfig {
  RankerVariant variant = RankerVariant::kListwise;
  int hidden = 128;
  double smooth_l1_delta = 0.1;
  int epochs = 20;
  int batch_size = 256;  // pointwise batches; listwise feeds one video per step
  double learning_rate = 1e-3;
  double decay_factor = 0.1;
  int decay_epoch = 10;
  uint64_t seed = 1;
};

// One training example: features plus its overlap label.
struct LabeledProposal {
  ProposalFeatures features;
  OverlapLabel label;
};

// Proposals grouped per video (each inner vector is one video's list).
RankerParams train_ranker(const std::vector<std::vector<LabeledProposal>>& videos,
                          const RankerTrainConfig& cfg);

double final_score(const proposal::Proposal& p, double phi);

// Greedy NMS on temporal IoU; survivors sorted by descending final score.
std::vector<proposal::Proposal> nms(const std::vector<proposal::Proposal>& proposals,
                                    double iou_threshold = 0.8);

struct RankerCheckpoint {
  RankerParams params;
  RankerVariant variant = RankerVariant::kListwise;
  double max_video_length = 0.0;  // training-split maximum, seconds
};

void save_ranker(const RankerCheckpoint& ckpt, const std::filesystem::path& path);
RankerCheckpoint load_ranker(const std::filesystem::path& path);

}  // namespace tal::ranking
