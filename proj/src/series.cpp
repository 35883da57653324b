#include "statedet/series.hpp"

#include <cmath>
#include <string>

#include "statedet/error.hpp"

namespace statedet {

MultivariateTimeSeries::MultivariateTimeSeries(Matrix values,
                                               std::optional<std::vector<Label>> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw SizingError("series must have at least one variate and one time step");
  }
  for (std::size_t n = 0; n < values_.rows(); ++n) {
    for (std::size_t t = 0; t < values_.cols(); ++t) {
      if (!std::isfinite(values_(n, t))) {
        throw NumericError("non-finite value at variate " + std::to_string(n) + ", step " +
                           std::to_string(t));
      }
    }
  }
  if (labels_) {
    if (labels_->size() != values_.cols()) {
      throw DimensionError("label count " + std::to_string(labels_->size()) +
                           " does not match series length " + std::to_string(values_.cols()));
    }
    for (std::size_t t = 0; t < labels_->size(); ++t) {
      if ((*labels_)[t] < 0) {
        throw ConfigError("negative label at step " + std::to_string(t));
      }
    }
  }
}

void SlidingWindowConfig::validate() const {
  if (window_size < 2) {
    throw ConfigError("window.size must be >= 2 (got " + std::to_string(window_size) + ")");
  }
  if (step_size < 1 || step_size > window_size) {
    throw ConfigError("window.step must satisfy 1 <= step <= window.size (got " +
                      std::to_string(step_size) + ")");
  }
}

std::vector<std::size_t> window_starts(std::size_t length, const SlidingWindowConfig& cfg) {
  cfg.validate();
  if (cfg.window_size > length) {
    throw SizingError("window size " + std::to_string(cfg.window_size) +
                      " exceeds series length " + std::to_string(length));
  }
  std::vector<std::size_t> starts;
  const std::size_t last = length - cfg.window_size;
  for (std::size_t s = 0; s <= last; s += cfg.step_size) starts.push_back(s);
  return starts;
}

std::vector<std::size_t> covering_starts(std::size_t length, const SlidingWindowConfig& cfg) {
  auto starts = window_starts(length, cfg);
  if (starts.back() != length - cfg.window_size) starts.push_back(length - cfg.window_size);
  return starts;
}

Window extract_window(const MultivariateTimeSeries& series, std::size_t start,
                      std::size_t window_size) {
  if (start + window_size > series.length()) {
    throw SizingError("window [" + std::to_string(start) + ", " +
                      std::to_string(start + window_size) + ") exceeds series length " +
                      std::to_string(series.length()));
  }
  Window w{Matrix(series.dims(), window_size), start};
  for (std::size_t n = 0; n < series.dims(); ++n) {
    auto src = series.values().row(n);
    auto dst = w.data.row(n);
    for (std::size_t p = 0; p < window_size; ++p) dst[p] = src[start + p];
  }
  return w;
}

std::vector<Window> windows(const MultivariateTimeSeries& series, const SlidingWindowConfig& cfg) {
  std::vector<Window> out;
  for (std::size_t s : window_starts(series.length(), cfg)) {
    out.push_back(extract_window(series, s, cfg.window_size));
  }
  return out;
}

std::size_t coverage_count(std::size_t t, const SlidingWindowConfig& cfg, std::size_t length) {
  if (t >= length) {
    throw SizingError("time index " + std::to_string(t) + " outside series of length " +
                      std::to_string(length));
  }
  std::size_t count = 0;
  for (std::size_t s : window_starts(length, cfg)) {
    if (s > t) break;
    if (t < s + cfg.window_size) ++count;
  }
  return count;
}

}  // namespace statedet
