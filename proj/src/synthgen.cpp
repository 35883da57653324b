#include "statedet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "statedet/error.hpp"

namespace statedet {
namespace {

std::vector<std::size_t> draw_durations(const SynthConfig& cfg, std::mt19937_64& rng) {
  const std::size_t t = cfg.length;
  const std::size_t fewest = (t + cfg.max_duration - 1) / cfg.max_duration;
  const std::size_t most = t / cfg.min_duration;
  if (most < cfg.num_states) {
    throw SizingError("synth.length " + std::to_string(t) + " cannot host " +
                      std::to_string(cfg.num_states) + " segments of at least " +
                      std::to_string(cfg.min_duration) + " steps");
  }
  if (fewest > most) {
    throw SizingError("synth.length " + std::to_string(t) +
                      " cannot be split into segments within [" +
                      std::to_string(cfg.min_duration) + ", " + std::to_string(cfg.max_duration) +
                      "]");
  }
  const double mean = 0.5 * static_cast<double>(cfg.min_duration + cfg.max_duration);
  auto count = static_cast<std::size_t>(std::llround(static_cast<double>(t) / mean));
  count = std::clamp(count, std::max(fewest, cfg.num_states), most);

  std::uniform_int_distribution<std::size_t> dist(cfg.min_duration, cfg.max_duration);
  std::vector<std::size_t> d(count);
  for (auto& x : d) x = dist(rng);

  // Push the total onto T while keeping every duration inside its bounds.
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto sum = std::accumulate(d.begin(), d.end(), std::size_t{0});
  for (std::size_t idx : order) {
    if (sum < t) {
      const std::size_t add = std::min(t - sum, cfg.max_duration - d[idx]);
      d[idx] += add;
      sum += add;
    } else if (sum > t) {
      const std::size_t cut = std::min(sum - t, d[idx] - cfg.min_duration);
      d[idx] -= cut;
      sum -= cut;
    }
  }
  return d;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_states < 2) throw ConfigError("synth.num_states must be >= 2");
  if (dims < 1) throw ConfigError("synth.dims must be >= 1");
  if (min_duration < 1) throw ConfigError("synth.min_duration must be >= 1");
  if (min_duration > max_duration) {
    throw ConfigError("synth.min_duration (" + std::to_string(min_duration) +
                      ") exceeds synth.max_duration (" + std::to_string(max_duration) + ")");
  }
  if (!(min_frequency > 0.0 && min_frequency < max_frequency && max_frequency <= 0.5)) {
    throw ConfigError("synth frequencies need 0 < min_frequency < max_frequency <= 0.5");
  }
  if (!(min_amplitude > 0.0 && min_amplitude <= max_amplitude)) {
    throw ConfigError("synth amplitudes need 0 < min_amplitude <= max_amplitude");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth.noise_sigma must be >= 0");
}

SyntheticSeries generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const std::size_t s_count = cfg.num_states;

  std::vector<StateProfile> states(s_count);
  for (auto& s : states) {
    s.frequency.resize(cfg.dims);
    s.amplitude.resize(cfg.dims);
    s.phase.resize(cfg.dims);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Each variate gets independent shuffles of S frequency strata and S
  // log-amplitude strata; a state draws from the inner 60% of its strata so
  // neighbouring states stay apart.
  auto strata_draw = [&](double lo, double hi, std::vector<double>& out) {
    const double width = (hi - lo) / static_cast<double>(s_count);
    std::vector<std::size_t> strata(s_count);
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    out.resize(s_count);
    for (std::size_t s = 0; s < s_count; ++s) {
      out[s] = lo + width * (static_cast<double>(strata[s]) + 0.2 + 0.6 * unit(rng));
    }
  };
  std::vector<double> freq, log_amp;
  const double log_lo = std::log(cfg.min_amplitude), log_hi = std::log(cfg.max_amplitude);
  for (std::size_t n = 0; n < cfg.dims; ++n) {
    strata_draw(cfg.min_frequency, cfg.max_frequency, freq);
    strata_draw(log_lo, log_hi, log_amp);
    for (std::size_t s = 0; s < s_count; ++s) {
      states[s].frequency[n] = freq[s];
      states[s].amplitude[n] = std::exp(log_amp[s]);
      states[s].phase[n] = 2.0 * std::numbers::pi * unit(rng);
    }
  }

  const auto durations = draw_durations(cfg, rng);
  std::vector<Label> order(s_count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Segment> segments;
  std::size_t start = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    Label state;
    if (i < s_count) {
      state = order[i];
    } else {
      std::uniform_int_distribution<Label> pick(0, static_cast<Label>(s_count) - 2);
      state = pick(rng);
      if (state >= segments.back().state) ++state;
    }
    segments.push_back({start, durations[i], state});
    start += durations[i];
  }

  Matrix values(cfg.dims, cfg.length);
  std::vector<Label> labels(cfg.length);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& seg : segments) {
    const auto& prof = states[static_cast<std::size_t>(seg.state)];
    for (std::size_t t = seg.start; t < seg.start + seg.length; ++t) {
      labels[t] = seg.state;
      for (std::size_t n = 0; n < cfg.dims; ++n) {
        const double a = prof.amplitude[n];
        const double sigma = cfg.noise_sigma * (cfg.relative_noise ? a : 1.0);
        values(n, t) = a * std::sin(2.0 * std::numbers::pi * prof.frequency[n] *
                                        static_cast<double>(t) + prof.phase[n]) +
                       sigma * noise(rng);
      }
    }
  }
  return {MultivariateTimeSeries(std::move(values), std::move(labels)), std::move(states),
          std::move(segments)};
}

}  // namespace statedet
