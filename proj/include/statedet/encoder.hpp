#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "statedet/decompose.hpp"
#include "statedet/matrix.hpp"

namespace statedet {

struct EncoderConfig {
  std::size_t input_dims = 0;  // N
  std::size_t channels = 80;   // C
  std::size_t embed_dim = 4;   // D
  std::size_t kernel_size = 3;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

// Fixed random 1-D convolution, weights laid out [channel][variate][tap].
struct ConvProjection {
  Vector weight;
  Vector bias;

  bool operator==(const ConvProjection&) const = default;
};

// y = W x + b with W stored out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Dual-view encoder parameters. The two convolutions are drawn once at
/// init and never trained; only the three dense layers receive gradients.
struct EncoderParams {
  EncoderConfig config;
  ConvProjection conv_trend;
  ConvProjection conv_seasonal;
  DenseLayer trend;     // C -> D, rectified
  DenseLayer seasonal;  // C -> D, rectified
  DenseLayer fusion;    // 2D -> D, linear

  bool operator==(const EncoderParams&) const = default;
};

struct Embedding {
  Vector z;
  Vector z_trend;
  Vector z_seasonal;
};

struct ViewTrace {
  Vector pooled;          // length C
  Vector pre_activation;  // length D, before the rectifier
};

struct ForwardTrace {
  ViewTrace trend;
  ViewTrace seasonal;
  Vector fusion_input;  // concat(z_trend, z_seasonal)
};

/// Same shapes as the trainable layers of EncoderParams.
struct EncoderGradients {
  DenseLayer trend;
  DenseLayer seasonal;
  DenseLayer fusion;
};

struct ParamCounts {
  std::size_t trainable = 0;
  std::size_t total = 0;
};

EncoderParams init_encoder(const EncoderConfig& cfg);

/// Convolve (same length, replicate padding), global max-pool over time,
/// rectified dense layer per view, then a linear fusion of both views.
Embedding embed(const EncoderParams& params, const DecomposedWindow& window,
                ForwardTrace* trace = nullptr);

/// Accumulates exact gradients of the trainable layers over a batch. Empty
/// grad_trend / grad_seasonal spans are treated as zero.
EncoderGradients backward(const EncoderParams& params, std::span<const ForwardTrace> traces,
                          std::span<const Vector> grad_z, std::span<const Vector> grad_trend = {},
                          std::span<const Vector> grad_seasonal = {});

EncoderGradients zero_gradients(const EncoderParams& params);

ParamCounts param_counts(const EncoderParams& params);
ParamCounts param_counts(const EncoderConfig& cfg);

// Flat views over the trainable tensors, in a fixed order shared by both.
std::vector<std::span<double>> trainable_tensors(EncoderParams& params);
std::vector<std::span<double>> gradient_tensors(EncoderGradients& grads);

void save_encoder(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_encoder(const std::filesystem::path& path);

}  // namespace statedet
