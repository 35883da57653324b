#include "statedet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "statedet/error.hpp"

namespace statedet {
namespace {

std::vector<std::size_t> dense_ids(std::span<const Label> labels, std::size_t& classes) {
  std::unordered_map<Label, std::size_t> ids;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(labels[i], ids.size());
    out[i] = it->second;
  }
  classes = ids.size();
  return out;
}

void check_lengths(std::span<const Label> truth, std::span<const Label> pred, std::size_t minimum) {
  if (truth.size() != pred.size()) {
    throw DimensionError("label sequences differ in length (" + std::to_string(truth.size()) +
                         " vs " + std::to_string(pred.size()) + ")");
  }
  if (truth.size() < minimum) {
    throw SizingError("label sequences need at least " + std::to_string(minimum) + " entries");
  }
}

double choose2(std::size_t n) {
  return n < 2 ? 0.0 : 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
}

double entropy(const std::vector<std::size_t>& sums, double total) {
  double h = 0.0;
  for (std::size_t s : sums) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / total;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

ContingencyTable ContingencyTable::build(std::span<const Label> truth, std::span<const Label> pred) {
  check_lengths(truth, pred, 0);
  std::size_t rows = 0, cols = 0;
  auto t = dense_ids(truth, rows);
  auto p = dense_ids(pred, cols);
  ContingencyTable table;
  table.counts.assign(rows, std::vector<std::size_t>(cols, 0));
  table.row_sums.assign(rows, 0);
  table.col_sums.assign(cols, 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    ++table.counts[t[i]][p[i]];
    ++table.row_sums[t[i]];
    ++table.col_sums[p[i]];
  }
  table.total = t.size();
  return table;
}

double ari(std::span<const Label> truth, std::span<const Label> pred) {
  check_lengths(truth, pred, 2);
  const auto table = ContingencyTable::build(truth, pred);
  double index = 0.0;
  for (const auto& row : table.counts) {
    for (std::size_t c : row) index += choose2(c);
  }
  double a = 0.0, b = 0.0;
  for (std::size_t s : table.row_sums) a += choose2(s);
  for (std::size_t s : table.col_sums) b += choose2(s);
  const double expected = a * b / choose2(table.total);
  const double maximum = 0.5 * (a + b);
  // Identical partitions (including the all-one-cluster case where the
  // denominator vanishes) score exactly 1.
  if (maximum == expected) return index == maximum ? 1.0 : 0.0;
  return (index - expected) / (maximum - expected);
}

double nmi(std::span<const Label> truth, std::span<const Label> pred) {
  check_lengths(truth, pred, 1);
  const auto table = ContingencyTable::build(truth, pred);
  const bool single_truth = table.row_sums.size() == 1;
  const bool single_pred = table.col_sums.size() == 1;
  if (single_truth && single_pred) return 1.0;
  if (single_truth || single_pred) return 0.0;

  const double n = static_cast<double>(table.total);
  double mi = 0.0;
  for (std::size_t i = 0; i < table.counts.size(); ++i) {
    for (std::size_t j = 0; j < table.counts[i].size(); ++j) {
      const std::size_t c = table.counts[i][j];
      if (c == 0) continue;
      const double pij = static_cast<double>(c) / n;
      mi += pij * std::log(pij * n * n /
                           (static_cast<double>(table.row_sums[i]) *
                            static_cast<double>(table.col_sums[j])));
    }
  }
  const double denom = 0.5 * (entropy(table.row_sums, n) + entropy(table.col_sums, n));
  return std::clamp(mi / denom, 0.0, 1.0);
}

std::size_t distinct_count(std::span<const Label> labels) {
  std::size_t classes = 0;
  dense_ids(labels, classes);
  return classes;
}

}  // namespace statedet
