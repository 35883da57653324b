#include "statedet/pipeline.hpp"

#include <chrono>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "statedet/error.hpp"

namespace statedet {

DetectMode parse_mode(std::string_view name) {
  if (name == "offline") return DetectMode::kOffline;
  if (name == "adatd") return DetectMode::kAdatd;
  if (name == "acd") return DetectMode::kAcd;
  if (name == "std") return DetectMode::kStd;
  throw ConfigError("unknown detection mode '" + std::string(name) +
                    "' (expected offline, adatd, acd or std)");
}

std::string_view mode_name(DetectMode mode) {
  switch (mode) {
    case DetectMode::kOffline: return "offline";
    case DetectMode::kAdatd: return "adatd";
    case DetectMode::kAcd: return "acd";
    case DetectMode::kStd: return "std";
  }
  return "offline";
}

void PipelineConfig::validate() const {
  windows.validate();
  dpgmm.validate();
  if (stage.trend_kernel == 0 || stage.trend_kernel % 2 == 0) {
    throw ConfigError("decompose.kernel must be odd and >= 1");
  }
  if (!(adatd.tau_init > 0.0)) throw ConfigError("detect.tau_init must be > 0");
  if (!(adatd.delta_inc > 0.0 && adatd.delta_inc < 1.0)) {
    throw ConfigError("detect.delta_inc must lie in (0, 1)");
  }
  if (!(adatd.delta_dec > 0.0 && adatd.delta_dec < 1.0)) {
    throw ConfigError("detect.delta_dec must lie in (0, 1)");
  }
  if (!(tau_fixed > 0.0)) throw ConfigError("detect.tau_fixed must be > 0");
  if (buffer_cap < 1) throw ConfigError("detect.buffer_cap must be >= 1");
}

Label majority_vote(std::span<const Label> votes) {
  if (votes.empty()) throw std::logic_error("majority_vote: no votes for a covered step");
  std::unordered_map<Label, std::size_t> tally;
  for (Label v : votes) ++tally[v];
  Label best = votes.front();
  std::size_t best_count = 0;
  for (Label v : votes) {
    if (tally[v] > best_count) {
      best = v;
      best_count = tally[v];
    }
  }
  return best;
}

StateSequence assemble_states(std::size_t length, std::size_t window_size,
                              std::span<const std::size_t> starts,
                              std::span<const Label> window_labels) {
  if (starts.size() != window_labels.size()) {
    throw DimensionError("assemble_states: one label per window expected");
  }
  StateSequence out;
  out.states.resize(length);
  std::vector<Label> votes;
  std::size_t first = 0;
  for (std::size_t t = 0; t < length; ++t) {
    while (first < starts.size() && starts[first] + window_size <= t) ++first;
    votes.clear();
    for (std::size_t w = first; w < starts.size() && starts[w] <= t; ++w) {
      if (t < starts[w] + window_size) votes.push_back(window_labels[w]);
    }
    if (votes.empty()) {
      throw std::logic_error("assemble_states: step " + std::to_string(t) + " is not covered");
    }
    out.states[t] = majority_vote(votes);
  }
  return out;
}

DetectionResult detect_offline(const MultivariateTimeSeries& series, const EncoderParams& encoder,
                               const PipelineConfig& cfg, DpgmmModel* model) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  DetectionResult result;
  result.window_starts = covering_starts(series.length(), cfg.windows);
  std::vector<Window> batch;
  batch.reserve(result.window_starts.size());
  for (std::size_t s : result.window_starts) {
    batch.push_back(extract_window(series, s, cfg.windows.window_size));
  }
  const auto embeddings = encode_windows(encoder, cfg.stage, batch);
  std::vector<Vector> points;
  points.reserve(embeddings.size());
  for (const auto& e : embeddings) points.push_back(e.z);

  DpgmmModel fitted = fit_dpgmm(points, cfg.dpgmm);
  result.window_labels.reserve(points.size());
  for (const auto& p : points) result.window_labels.push_back(static_cast<Label>(predict(fitted, p)));
  result.states = assemble_states(series.length(), cfg.windows.window_size, result.window_starts,
                                  result.window_labels);
  result.stats.clustering_ops = 1;
  result.stats.windows_seen = batch.size();
  result.stats.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (model) *model = std::move(fitted);
  return result;
}

}  // namespace statedet
