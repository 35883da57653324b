#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "statedet/series.hpp"

namespace statedet {

struct SynthConfig {
  std::size_t num_states = 5;  // S
  std::size_t dims = 4;        // N
  std::size_t length = 10000;  // T
  std::size_t min_duration = 600;
  std::size_t max_duration = 1200;
  double min_frequency = 0.01;  // cycles per step
  double max_frequency = 0.1;
  double min_amplitude = 0.5;
  double max_amplitude = 2.0;
  double noise_sigma = 0.3;
  bool relative_noise = true;  // noise_sigma scales with each variate's amplitude
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

// Per-variate sinusoid parameters of one state.
struct StateProfile {
  Vector frequency;
  Vector amplitude;
  Vector phase;
};

struct Segment {
  std::size_t start = 0;
  std::size_t length = 0;
  Label state = 0;
};

struct SyntheticSeries {
  MultivariateTimeSeries series;  // labelled
  std::vector<StateProfile> states;
  std::vector<Segment> segments;
};

/// Piecewise-stationary sinusoids plus Gaussian noise. Frequencies of
/// different states come from disjoint strata of the frequency range, so they
/// are pairwise distinct in every variate; every state appears at least once.
SyntheticSeries generate_synthetic(const SynthConfig& cfg);

}  // namespace statedet
