#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "statedet/dpgmm.hpp"
#include "statedet/encoder.hpp"
#include "statedet/kernels.hpp"
#include "statedet/series.hpp"

namespace statedet {

enum class DetectMode {
  kOffline,  // embed everything, one clustering fit
  kAdatd,    // adaptive threshold
  kAcd,      // cluster every window
  kStd,      // fixed threshold
};

DetectMode parse_mode(std::string_view name);
std::string_view mode_name(DetectMode mode);

struct AdatdConfig {
  double tau_init = 1.0;
  double delta_inc = 0.08;  // growth factor applied while the state holds or on a transition
  double delta_dec = 0.1;   // shrink factor applied after a rejected transition

  bool operator==(const AdatdConfig&) const = default;
};

struct PipelineConfig {
  SlidingWindowConfig windows;
  EmbeddingStage stage;
  DpgmmConfig dpgmm;
  DetectMode mode = DetectMode::kOffline;
  AdatdConfig adatd;
  double tau_fixed = 0.4;
  std::size_t buffer_cap = 2048;
  bool normalize_similarity = false;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

struct RunStats {
  std::size_t clustering_ops = 0;
  std::size_t windows_seen = 0;
  double wall_time_s = 0.0;
};

struct DetectionResult {
  StateSequence states;
  std::vector<std::size_t> window_starts;
  std::vector<Label> window_labels;
  RunStats stats;
};

/// Mode of the votes; among tied labels the one voted first wins.
Label majority_vote(std::span<const Label> votes);

/// Per-step states from per-window labels. Votes for a step are taken in
/// window order; a step with no covering window is a logic error.
StateSequence assemble_states(std::size_t length, std::size_t window_size,
                              std::span<const std::size_t> starts,
                              std::span<const Label> window_labels);

/// Offline detection. The fitted mixture is returned through `model` when given.
DetectionResult detect_offline(const MultivariateTimeSeries& series, const EncoderParams& encoder,
                               const PipelineConfig& cfg, DpgmmModel* model = nullptr);

/// One processed window of a stream.
struct StepRecord {
  std::size_t index = 0;
  double similarity = 0.0;  // undefined for the first window
  bool clustered = false;
  Label cluster_outcome = -1;  // what clustering returned, -1 when skipped
  Label state = 0;
  double tau = 0.0;  // threshold after the step
};

/// Streaming state machine. Only the first window and windows whose
/// similarity to the last transition embedding falls below the threshold are
/// clustered; the threshold moves multiplicatively after every later window.
///
/// Clustering appends to a bounded FIFO buffer of all seen embeddings and
/// refits the mixture on it, unless a frozen model or a custom clustering
/// function is supplied. Label identities survive refits: every populated
/// component of a new fit claims, one-to-one and nearest first, a known label
/// whose last component holds its mean inside a 3-sigma box; unclaimed
/// components open fresh labels.
class StreamDetector {
 public:
  using ClusterFn = std::function<Label(std::span<const double>)>;

  StreamDetector(EncoderParams encoder, PipelineConfig cfg);
  StreamDetector(EncoderParams encoder, PipelineConfig cfg, DpgmmModel frozen);
  /// Embedding-level detector driven by an external clustering function;
  /// step(Window) is unavailable.
  StreamDetector(PipelineConfig cfg, ClusterFn cluster);

  Label step(const Window& window);
  Label step_embedding(std::span<const double> z);

  double tau() const noexcept { return tau_; }
  std::size_t clustering_ops() const noexcept { return clustering_ops_; }
  std::size_t windows_seen() const noexcept { return windows_seen_; }
  const std::vector<StepRecord>& trace() const noexcept { return trace_; }

 private:
  struct LabelAnchor {
    Vector mean;
    Vector variance;
    Label label = 0;
  };

  Label cluster(std::span<const double> z);
  Label refit_and_assign(std::span<const double> z);
  double similarity(std::span<const double> a, std::span<const double> b) const;

  std::optional<EncoderParams> encoder_;
  PipelineConfig cfg_;
  std::optional<DpgmmModel> frozen_;
  ClusterFn custom_;

  std::vector<Vector> buffer_;
  std::size_t buffer_head_ = 0;
  std::vector<LabelAnchor> anchors_;  // last component seen for every label
  Label next_label_ = 0;

  Vector z_pre_;
  Label s_pre_ = 0;
  double tau_ = 0.0;
  std::size_t windows_seen_ = 0;
  std::size_t clustering_ops_ = 0;
  std::vector<StepRecord> trace_;
};

struct StreamResult {
  DetectionResult detection;
  std::vector<StepRecord> trace;
};

/// Feeds the window lattice through a StreamDetector in time order and
/// majority-votes per step. With `frozen`, clustering is prediction only.
StreamResult stream_run(const MultivariateTimeSeries& series, const EncoderParams& encoder,
                        const PipelineConfig& cfg, const DpgmmModel* frozen = nullptr);

}  // namespace statedet
