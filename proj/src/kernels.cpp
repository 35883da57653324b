#include "statedet/kernels.hpp"

#include <exception>

#include <omp.h>

#include "statedet/decompose.hpp"

namespace statedet {

Embedding encode_window(const EncoderParams& params, const EmbeddingStage& stage,
                        const Matrix& window, ForwardTrace* trace) {
  CompressedWindow cw = compress(window, stage.compressor);
  return embed(params, decompose(cw.data, stage.trend_kernel), trace);
}

std::vector<Embedding> encode_windows(const EncoderParams& params, const EmbeddingStage& stage,
                                      std::span<const Window> windows,
                                      std::vector<ForwardTrace>* traces) {
  const auto count = static_cast<std::ptrdiff_t>(windows.size());
  std::vector<Embedding> out(windows.size());
  if (traces) traces->assign(windows.size(), ForwardTrace{});
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      auto idx = static_cast<std::size_t>(i);
      out[idx] = encode_window(params, stage, windows[idx].data, traces ? &(*traces)[idx] : nullptr);
    } catch (...) {
#pragma omp critical(statedet_encode_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Embedding> encode_windows_serial(const EncoderParams& params,
                                             const EmbeddingStage& stage,
                                             std::span<const Window> windows,
                                             std::vector<ForwardTrace>* traces) {
  std::vector<Embedding> out;
  out.reserve(windows.size());
  if (traces) traces->assign(windows.size(), ForwardTrace{});
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out.push_back(encode_window(params, stage, windows[i].data, traces ? &(*traces)[i] : nullptr));
  }
  return out;
}

void calibrate_conv_bias(EncoderParams& params, const EmbeddingStage& stage,
                         std::span<const Window> windows) {
  if (windows.empty()) return;
  std::vector<ForwardTrace> traces;
  encode_windows(params, stage, windows, &traces);
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (std::size_t c = 0; c < params.conv_trend.bias.size(); ++c) {
    double trend = 0.0, seasonal = 0.0;
    for (const auto& t : traces) {
      trend += t.trend.pooled[c];
      seasonal += t.seasonal.pooled[c];
    }
    params.conv_trend.bias[c] -= trend * inv;
    params.conv_seasonal.bias[c] -= seasonal * inv;
  }
}

int kernel_threads() { return omp_get_max_threads(); }

}  // namespace statedet
