#include "statedet/decompose.hpp"

#include <algorithm>
#include <string>

#include "statedet/error.hpp"

namespace statedet {

Matrix moving_average_trend(const Matrix& x, std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) {
    throw ConfigError("decompose.kernel must be odd and >= 1 (got " + std::to_string(kernel) + ")");
  }
  if (kernel > x.cols()) {
    throw ConfigError("decompose.kernel " + std::to_string(kernel) +
                      " exceeds window length " + std::to_string(x.cols()));
  }
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  const auto len = static_cast<std::ptrdiff_t>(x.cols());
  const double inv = 1.0 / static_cast<double>(kernel);
  Matrix trend(x.rows(), x.cols());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    auto src = x.row(n);
    auto dst = trend.row(n);
    for (std::ptrdiff_t t = 0; t < len; ++t) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -half; i <= half; ++i) {
        std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(t + i, 0, len - 1);
        acc += src[static_cast<std::size_t>(idx)];
      }
      dst[static_cast<std::size_t>(t)] = acc * inv;
    }
  }
  return trend;
}

DecomposedWindow decompose(const Matrix& x, std::size_t kernel) {
  DecomposedWindow out{moving_average_trend(x, kernel), Matrix(x.rows(), x.cols())};
  auto src = x.flat();
  auto tr = out.trend.flat();
  auto se = out.seasonal.flat();
  for (std::size_t i = 0; i < src.size(); ++i) se[i] = src[i] - tr[i];
  return out;
}

}  // namespace statedet
