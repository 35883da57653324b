#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "statedet/dpgmm.hpp"
#include "statedet/encoder.hpp"
#include "statedet/fncc.hpp"
#include "statedet/pipeline.hpp"
#include "statedet/synthgen.hpp"

namespace statedet {

/// Every tunable of a run, one JSON section per module:
/// window, compressor, decompose, encoder, train, dpgmm, detect, synth.
/// encoder.input_dims is not part of the document; it comes from the data.
struct RunConfig {
  SlidingWindowConfig window;
  CompressorConfig compressor;
  std::size_t trend_kernel = 5;
  EncoderConfig encoder;
  bool calibrate_bias = true;
  TrainConfig train;
  DpgmmConfig dpgmm;
  DetectMode mode = DetectMode::kOffline;
  AdatdConfig adatd;
  double tau_fixed = 0.4;
  std::size_t buffer_cap = 2048;
  bool normalize_similarity = false;
  SynthConfig synth;

  /// Cross-module checks on top of each section's own invariants.
  void validate() const;

  /// Sets the encoder, train, dpgmm and synth seeds at once.
  void set_seed(std::uint64_t seed);

  EmbeddingStage stage() const;
  PipelineConfig pipeline() const;

  bool operator==(const RunConfig&) const = default;
};

/// Missing keys keep their defaults; unknown keys and wrongly typed values
/// raise ConfigError naming the field. The result is validated.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Pretty-printed JSON with every field; parse_config(dump_config(c)) == c.
std::string dump_config(const RunConfig& cfg);

}  // namespace statedet
