#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "statedet/matrix.hpp"

namespace statedet {

struct DpgmmConfig {
  std::size_t truncation = 10;     // K_max
  double concentration = 1.0;      // alpha of the stick-breaking prior
  double prior_mean_scale = 1.0;   // prior mean = scale * data mean
  double prior_precision = 0.01;   // beta0, pseudo-count behind the prior mean
  double prior_var_scale = 1.0;    // prior variance = scale * per-dimension data variance
  std::size_t max_iters = 200;
  std::size_t restarts = 4;        // seeds seed, seed+1, ...; the highest ELBO is kept
  double tol = 1e-4;               // relative ELBO change that ends the fit
  double weight_floor = 0.01;      // components below this weight are not counted
  double var_floor = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const DpgmmConfig&) const = default;
};

/// Variational posterior of a truncated Dirichlet-process mixture with
/// diagonal Gaussian components.
struct DpgmmModel {
  Vector weights;    // expected stick-breaking weights, length K_max
  Vector counts;     // expected number of fitted points per component
  Matrix means;      // K_max x D
  Matrix variances;  // K_max x D
  double weight_floor = 0.01;

  double elbo = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> elbo_trace;  // one value per coordinate-ascent sweep

  std::size_t components() const noexcept { return weights.size(); }
  std::size_t dims() const noexcept { return means.cols(); }
};

/// Mean-field coordinate ascent, initialised from k-means++ seeds, repeated
/// `restarts` times.
DpgmmModel fit_dpgmm(std::span<const Vector> points, const DpgmmConfig& cfg);

/// log weight_k + log N(x; mean_k, diag variance_k) for every component.
Vector component_log_scores(const DpgmmModel& model, std::span<const double> point);

/// Component maximising weight x density; first index wins ties.
std::size_t predict(const DpgmmModel& model, std::span<const double> point);

/// Components with weight >= weight_floor that also hold at least half a
/// point of responsibility mass.
std::size_t effective_components(const DpgmmModel& model);

/// Largest drop between consecutive ELBO values (0 when non-decreasing).
double max_elbo_decrease(const DpgmmModel& model);

}  // namespace statedet
