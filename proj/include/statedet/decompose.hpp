#pragma once

#include <cstddef>

#include "statedet/matrix.hpp"

namespace statedet {

/// Trend/seasonal split of a window; trend + seasonal reproduces the source.
struct DecomposedWindow {
  Matrix trend;
  Matrix seasonal;
};

/// Centered moving average of odd width `kernel` along each row, with the
/// first/last column replicated past the edges.
Matrix moving_average_trend(const Matrix& x, std::size_t kernel);

DecomposedWindow decompose(const Matrix& x, std::size_t kernel);

}  // namespace statedet
