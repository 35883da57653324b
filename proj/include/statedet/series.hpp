#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "statedet/matrix.hpp"

namespace statedet {

using Label = int;

/// An N x T multivariate series with optional per-step ground truth.
///
/// Construction validates the invariants: N >= 1, T >= 1, every value finite,
/// labels (when present) of length T and non-negative.
class MultivariateTimeSeries {
 public:
  MultivariateTimeSeries() = default;
  explicit MultivariateTimeSeries(Matrix values,
                                  std::optional<std::vector<Label>> labels = std::nullopt);

  std::size_t dims() const noexcept { return values_.rows(); }
  std::size_t length() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  const std::optional<std::vector<Label>>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return labels_.has_value(); }

 private:
  Matrix values_;
  std::optional<std::vector<Label>> labels_;
};

struct SlidingWindowConfig {
  std::size_t window_size = 128;  // P
  std::size_t step_size = 50;     // B

  /// Throws ConfigError unless P >= 2 and 1 <= B <= P.
  void validate() const;
  bool operator==(const SlidingWindowConfig&) const = default;
};

/// A materialized copy of series columns [start, start + P).
struct Window {
  Matrix data;
  std::size_t start = 0;

  std::size_t length() const noexcept { return data.cols(); }
};

struct StateSequence {
  std::vector<Label> states;

  std::size_t size() const noexcept { return states.size(); }
};

/// Stride lattice: 0, B, 2B, ... up to the last start with start + P <= T.
std::vector<std::size_t> window_starts(std::size_t length, const SlidingWindowConfig& cfg);

/// The lattice plus a final anchor at T - P when the stride misses it, so
/// every step lies in some window. Detection runs on these.
std::vector<std::size_t> covering_starts(std::size_t length, const SlidingWindowConfig& cfg);

Window extract_window(const MultivariateTimeSeries& series, std::size_t start,
                      std::size_t window_size);

std::vector<Window> windows(const MultivariateTimeSeries& series, const SlidingWindowConfig& cfg);

/// Number of lattice windows (window_starts) whose range contains step t.
std::size_t coverage_count(std::size_t t, const SlidingWindowConfig& cfg, std::size_t length);

// CSV layout: one row per time step, one column per variate, optional header
// row (detected by a non-numeric first row) and optional trailing label column.
MultivariateTimeSeries load_csv(const std::filesystem::path& path, bool has_label_column);

/// Auto-detects a trailing column named `label` from the header.
MultivariateTimeSeries load_csv(const std::filesystem::path& path);

void save_csv(const MultivariateTimeSeries& series, const std::filesystem::path& path);

/// Integer column of a CSV: the one headed `label` or `state`, else the last.
std::vector<Label> load_labels(const std::filesystem::path& path);

/// Writes `t,state` rows.
void save_states(const StateSequence& states, const std::filesystem::path& path);

}  // namespace statedet
