#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "statedet/encoder.hpp"
#include "statedet/kernels.hpp"
#include "statedet/series.hpp"

namespace statedet {

struct TrainConfig {
  std::size_t groups = 20;     // U
  std::size_t group_size = 4;  // V
  double fraction = 0.5;       // share of candidate negative pairs kept
  double learning_rate = 0.003;
  std::size_t epochs = 20;
  std::size_t steps_per_epoch = 0;  // 0: scale with series length, see resolved_steps_per_epoch
  std::size_t group_stride = 0;     // spacing of windows in a group, 0: window step B
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// V windows starting at anchor, anchor + stride, ...
struct WindowGroup {
  std::size_t anchor = 0;
  std::vector<Window> windows;
};

struct GroupSummary {
  Vector d;           // centroid of fused embeddings
  Vector d_trend;     // centroid of trend-view embeddings
  Vector d_seasonal;  // centroid of seasonal-view embeddings
};

struct PairScore {
  std::size_t i = 0;
  std::size_t j = 0;
  double sim_trend = 0.0;
  double sim_seasonal = 0.0;
  double sim_overall = 0.0;
};

struct GroupPair {
  std::size_t i = 0;
  std::size_t j = 0;

  bool operator==(const GroupPair&) const = default;
};

struct LossValue {
  double total = 0.0;
  double pos = 0.0;
  double neg = 0.0;
};

using GroupEmbeddings = std::vector<std::vector<Embedding>>;  // [group][window]

std::size_t resolved_group_stride(const TrainConfig& cfg, const SlidingWindowConfig& swc);
/// steps_per_epoch when set, else max(kMinStepsPerEpoch, floor(T / (U V B))).
inline constexpr std::size_t kMinStepsPerEpoch = 20;
std::size_t resolved_steps_per_epoch(const TrainConfig& cfg, const SlidingWindowConfig& swc,
                                     std::size_t series_length);

/// Draws distinct anchors uniformly from [0, T - P - (V-1) stride]. When fewer
/// than U anchors exist the group count shrinks, with a warning.
std::vector<WindowGroup> sample_groups(const MultivariateTimeSeries& series,
                                       const SlidingWindowConfig& swc, const TrainConfig& cfg,
                                       std::mt19937_64& rng);

GroupSummary summarize(std::span<const Embedding> group);

/// One score per unordered pair (i < j), in lexicographic order.
std::vector<PairScore> pair_scores(std::span<const GroupSummary> summaries);

/// The max(1, floor(fraction * |pairs|)) least similar pairs by sim_overall,
/// ties broken by (i, j).
std::vector<GroupPair> filter_negatives(std::span<const PairScore> scores, double fraction);

double softplus(double x);
double logistic(double x);

/// Positive term over window pairs inside each group plus negative term over
/// the selected group pairs, using fused-embedding centroids. When grad_z is
/// given it receives dLoss/dz per window with the pair selection held fixed.
LossValue loss_fncc(const GroupEmbeddings& groups, std::span<const GroupPair> negatives,
                    std::vector<std::vector<Vector>>* grad_z = nullptr);

class Adam {
 public:
  Adam(double learning_rate, double beta1, double beta2, double epsilon)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<double>>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Vector> m_, v_;
};

struct TrainResult {
  EncoderParams params;
  std::vector<LossValue> history;  // one entry per optimizer step
};

/// Contrastive training of the encoder's dense layers. The convolution
/// projections are carried through untouched.
TrainResult train(const MultivariateTimeSeries& series, const SlidingWindowConfig& swc,
                  EncoderParams params, const EmbeddingStage& stage, const TrainConfig& cfg);

/// init -> optional bias calibration on the series' window lattice -> train.
TrainResult fit_encoder(const MultivariateTimeSeries& series, const SlidingWindowConfig& swc,
                        const EmbeddingStage& stage, const EncoderConfig& encoder_cfg,
                        const TrainConfig& cfg, bool calibrate = true);

}  // namespace statedet
