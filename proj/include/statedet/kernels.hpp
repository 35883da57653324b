#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "statedet/encoder.hpp"
#include "statedet/series.hpp"
#include "statedet/spectral.hpp"

namespace statedet {

// Everything between a raw window and its embedding.
struct EmbeddingStage {
  CompressorConfig compressor;
  std::size_t trend_kernel = 5;  // moving-average width

  bool operator==(const EmbeddingStage&) const = default;
};

/// compress -> decompose -> embed for a single window.
Embedding encode_window(const EncoderParams& params, const EmbeddingStage& stage,
                        const Matrix& window, ForwardTrace* trace = nullptr);

/// OpenMP fan-out of encode_window over a batch. Each window is independent,
/// so the result is bit-identical to encode_windows_serial for any thread count.
std::vector<Embedding> encode_windows(const EncoderParams& params, const EmbeddingStage& stage,
                                      std::span<const Window> windows,
                                      std::vector<ForwardTrace>* traces = nullptr);

/// Single-threaded reference for encode_windows.
std::vector<Embedding> encode_windows_serial(const EncoderParams& params,
                                             const EmbeddingStage& stage,
                                             std::span<const Window> windows,
                                             std::vector<ForwardTrace>* traces = nullptr);

/// Shifts every fixed convolution bias so that its pooled feature averages to
/// zero over `windows`. Max pooling commutes with a per-channel constant, so
/// this centres the inputs of the trainable layers exactly.
void calibrate_conv_bias(EncoderParams& params, const EmbeddingStage& stage,
                         std::span<const Window> windows);

/// Threads the parallel kernels will use.
int kernel_threads();

}  // namespace statedet
