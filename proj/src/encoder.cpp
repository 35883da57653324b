#include "statedet/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "statedet/error.hpp"

namespace statedet {
namespace {

ConvProjection draw_conv(std::mt19937_64& rng, const EncoderConfig& cfg) {
  const std::size_t taps = cfg.input_dims * cfg.kernel_size;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(taps));
  ConvProjection conv;
  conv.weight.resize(cfg.channels * taps);
  for (auto& w : conv.weight) w = normal(rng) * scale;
  conv.bias.resize(cfg.channels);
  for (auto& b : conv.bias) b = uniform(rng);
  return conv;
}

DenseLayer draw_dense(std::mt19937_64& rng, std::size_t out, std::size_t in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  DenseLayer layer{Matrix(out, in), Vector(out, 0.0)};
  for (auto& w : layer.weight.flat()) w = uniform(rng);
  return layer;
}

// Max over time of each channel of the convolved view.
Vector conv_max_pool(const ConvProjection& conv, const Matrix& x, std::size_t kernel) {
  const std::size_t dims = x.rows();
  const auto len = static_cast<std::ptrdiff_t>(x.cols());
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  const std::size_t channels = conv.bias.size();
  Vector pooled(channels, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < channels; ++c) {
    const double* wc = conv.weight.data() + c * dims * kernel;
    double best = -std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t t = 0; t < len; ++t) {
      double acc = conv.bias[c];
      for (std::size_t n = 0; n < dims; ++n) {
        auto row = x.row(n);
        const double* wn = wc + n * kernel;
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(kernel); ++i) {
          std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(t + i - half, 0, len - 1);
          acc += wn[i] * row[static_cast<std::size_t>(idx)];
        }
      }
      best = std::max(best, acc);
    }
    pooled[c] = best;
  }
  return pooled;
}

Vector affine(const DenseLayer& layer, std::span<const double> x) {
  Vector y(layer.bias);
  for (std::size_t o = 0; o < y.size(); ++o) y[o] += dot(layer.weight.row(o), x);
  return y;
}

DenseLayer zeros_like(const DenseLayer& layer) {
  return {Matrix(layer.weight.rows(), layer.weight.cols()), Vector(layer.bias.size(), 0.0)};
}

void accumulate(DenseLayer& grad, std::span<const double> upstream, std::span<const double> input) {
  for (std::size_t o = 0; o < upstream.size(); ++o) {
    if (upstream[o] == 0.0) continue;
    auto row = grad.weight.row(o);
    for (std::size_t i = 0; i < input.size(); ++i) row[i] += upstream[o] * input[i];
    grad.bias[o] += upstream[o];
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (input_dims < 1) throw ConfigError("encoder.input_dims must be >= 1");
  if (channels < 1) throw ConfigError("encoder.channels must be >= 1");
  if (embed_dim < 1) throw ConfigError("encoder.embed_dim must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ConfigError("encoder.kernel_size must be odd and >= 1 (got " +
                      std::to_string(kernel_size) + ")");
  }
}

EncoderParams init_encoder(const EncoderConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  EncoderParams p;
  p.config = cfg;
  p.conv_trend = draw_conv(rng, cfg);
  p.conv_seasonal = draw_conv(rng, cfg);
  p.trend = draw_dense(rng, cfg.embed_dim, cfg.channels);
  p.seasonal = draw_dense(rng, cfg.embed_dim, cfg.channels);
  p.fusion = draw_dense(rng, cfg.embed_dim, 2 * cfg.embed_dim);
  return p;
}

Embedding embed(const EncoderParams& params, const DecomposedWindow& window, ForwardTrace* trace) {
  const auto& cfg = params.config;
  if (window.trend.rows() != cfg.input_dims || window.seasonal.rows() != cfg.input_dims) {
    throw DimensionError("encoder expects " + std::to_string(cfg.input_dims) +
                         " variates, window has " + std::to_string(window.trend.rows()));
  }
  if (window.trend.cols() != window.seasonal.cols()) {
    throw DimensionError("trend and seasonal views differ in length");
  }
  if (window.trend.cols() < cfg.kernel_size) {
    throw SizingError("window length " + std::to_string(window.trend.cols()) +
                      " shorter than encoder kernel " + std::to_string(cfg.kernel_size));
  }

  const std::size_t d = cfg.embed_dim;
  Vector pooled_t = conv_max_pool(params.conv_trend, window.trend, cfg.kernel_size);
  Vector pooled_s = conv_max_pool(params.conv_seasonal, window.seasonal, cfg.kernel_size);
  Vector pre_t = affine(params.trend, pooled_t);
  Vector pre_s = affine(params.seasonal, pooled_s);

  Embedding out;
  out.z_trend.resize(d);
  out.z_seasonal.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.z_trend[i] = std::max(0.0, pre_t[i]);
    out.z_seasonal[i] = std::max(0.0, pre_s[i]);
  }
  Vector cat(out.z_trend);
  cat.insert(cat.end(), out.z_seasonal.begin(), out.z_seasonal.end());
  out.z = affine(params.fusion, cat);

  if (trace) {
    trace->trend = {std::move(pooled_t), std::move(pre_t)};
    trace->seasonal = {std::move(pooled_s), std::move(pre_s)};
    trace->fusion_input = std::move(cat);
  }
  return out;
}

EncoderGradients zero_gradients(const EncoderParams& params) {
  return {zeros_like(params.trend), zeros_like(params.seasonal), zeros_like(params.fusion)};
}

EncoderGradients backward(const EncoderParams& params, std::span<const ForwardTrace> traces,
                          std::span<const Vector> grad_z, std::span<const Vector> grad_trend,
                          std::span<const Vector> grad_seasonal) {
  if (grad_z.size() != traces.size() ||
      (!grad_trend.empty() && grad_trend.size() != traces.size()) ||
      (!grad_seasonal.empty() && grad_seasonal.size() != traces.size())) {
    throw DimensionError("backward: batch sizes of traces and gradients differ");
  }
  const std::size_t d = params.config.embed_dim;
  EncoderGradients g = zero_gradients(params);
  Vector up_t(d), up_s(d);
  for (std::size_t b = 0; b < traces.size(); ++b) {
    const ForwardTrace& tr = traces[b];
    accumulate(g.fusion, grad_z[b], tr.fusion_input);

    // Fusion input gradient, split back into the two views.
    for (std::size_t i = 0; i < d; ++i) {
      double gt = grad_trend.empty() ? 0.0 : grad_trend[b][i];
      double gs = grad_seasonal.empty() ? 0.0 : grad_seasonal[b][i];
      for (std::size_t o = 0; o < d; ++o) {
        gt += params.fusion.weight(o, i) * grad_z[b][o];
        gs += params.fusion.weight(o, d + i) * grad_z[b][o];
      }
      up_t[i] = tr.trend.pre_activation[i] > 0.0 ? gt : 0.0;
      up_s[i] = tr.seasonal.pre_activation[i] > 0.0 ? gs : 0.0;
    }
    accumulate(g.trend, up_t, tr.trend.pooled);
    accumulate(g.seasonal, up_s, tr.seasonal.pooled);
  }
  return g;
}

ParamCounts param_counts(const EncoderConfig& cfg) {
  const std::size_t c = cfg.channels, d = cfg.embed_dim;
  const std::size_t trainable = 2 * (c * d + d) + (2 * d * d + d);
  const std::size_t fixed = 2 * (cfg.kernel_size * cfg.input_dims * c + c);
  return {trainable, trainable + fixed};
}

ParamCounts param_counts(const EncoderParams& params) {
  auto dense = [](const DenseLayer& l) { return l.weight.size() + l.bias.size(); };
  auto conv = [](const ConvProjection& c) { return c.weight.size() + c.bias.size(); };
  const std::size_t trainable = dense(params.trend) + dense(params.seasonal) + dense(params.fusion);
  return {trainable, trainable + conv(params.conv_trend) + conv(params.conv_seasonal)};
}

std::vector<std::span<double>> trainable_tensors(EncoderParams& params) {
  return {params.trend.weight.flat(),    params.trend.bias,  params.seasonal.weight.flat(),
          params.seasonal.bias,          params.fusion.weight.flat(), params.fusion.bias};
}

std::vector<std::span<double>> gradient_tensors(EncoderGradients& grads) {
  return {grads.trend.weight.flat(),    grads.trend.bias,  grads.seasonal.weight.flat(),
          grads.seasonal.bias,          grads.fusion.weight.flat(), grads.fusion.bias};
}

}  // namespace statedet
