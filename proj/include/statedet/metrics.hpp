#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "statedet/series.hpp"

namespace statedet {

/// Counts n_ij of truth class i against predicted class j, with classes
/// re-indexed densely in order of first appearance.
struct ContingencyTable {
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::size_t> row_sums;
  std::vector<std::size_t> col_sums;
  std::size_t total = 0;

  static ContingencyTable build(std::span<const Label> truth, std::span<const Label> pred);
};

double ari(std::span<const Label> truth, std::span<const Label> pred);

/// Mutual information over the arithmetic mean of the two entropies (natural
/// log). Both labelings single-cluster -> 1; exactly one single-cluster -> 0.
double nmi(std::span<const Label> truth, std::span<const Label> pred);

std::size_t distinct_count(std::span<const Label> labels);

}  // namespace statedet
