#include "statedet/dpgmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/special_functions/digamma.hpp>

#include "statedet/error.hpp"

namespace statedet {
namespace {

using boost::math::digamma;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Variational factors besides the responsibilities.
struct Posterior {
  Vector stick_a, stick_b;  // Beta(a, b) per stick, K - 1 of them
  Vector beta, shape;       // Normal-Gamma pseudo-count and Gamma shape per component
  Matrix mean, rate;        // K x D
};

struct Prior {
  Vector mean;  // m0
  Vector rate;  // b0 per dimension
  double beta = 1.0;
  double shape = 1.0;  // a0
  double alpha = 1.0;
};

// Expectations shared by the E-step and the bound.
struct Expectations {
  Vector log_pi;                   // E[log pi_k]
  Vector log_v, log_1mv;           // E[log v_k], E[log(1 - v_k)], K - 1 entries
  Matrix log_lambda, lambda;       // E[log lambda_kd], E[lambda_kd]
};

Expectations expectations(const Posterior& q, std::size_t k_max, std::size_t dims) {
  Expectations e;
  e.log_pi.assign(k_max, 0.0);
  e.log_v.assign(k_max - 1, 0.0);
  e.log_1mv.assign(k_max - 1, 0.0);
  double carried = 0.0;
  for (std::size_t k = 0; k + 1 < k_max; ++k) {
    const double total = digamma(q.stick_a[k] + q.stick_b[k]);
    e.log_v[k] = digamma(q.stick_a[k]) - total;
    e.log_1mv[k] = digamma(q.stick_b[k]) - total;
    e.log_pi[k] = e.log_v[k] + carried;
    carried += e.log_1mv[k];
  }
  e.log_pi[k_max - 1] = carried;
  e.log_lambda = Matrix(k_max, dims);
  e.lambda = Matrix(k_max, dims);
  for (std::size_t k = 0; k < k_max; ++k) {
    const double dg = digamma(q.shape[k]);
    for (std::size_t d = 0; d < dims; ++d) {
      e.log_lambda(k, d) = dg - std::log(q.rate(k, d));
      e.lambda(k, d) = q.shape[k] / q.rate(k, d);
    }
  }
  return e;
}

Posterior m_step(std::span<const Vector> x, const Matrix& resp, const Prior& prior,
                 std::size_t k_max) {
  const std::size_t n = x.size();
  const std::size_t dims = prior.mean.size();
  Vector nk(k_max, 0.0);
  Matrix xbar(k_max, dims), scatter(k_max, dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < k_max; ++k) {
      const double r = resp(i, k);
      nk[k] += r;
      for (std::size_t d = 0; d < dims; ++d) xbar(k, d) += r * x[i][d];
    }
  }
  for (std::size_t k = 0; k < k_max; ++k) {
    for (std::size_t d = 0; d < dims; ++d) xbar(k, d) = nk[k] > 0.0 ? xbar(k, d) / nk[k] : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < k_max; ++k) {
      const double r = resp(i, k);
      for (std::size_t d = 0; d < dims; ++d) {
        const double dev = x[i][d] - xbar(k, d);
        scatter(k, d) += r * dev * dev;
      }
    }
  }

  Posterior q;
  q.stick_a.resize(k_max - 1);
  q.stick_b.resize(k_max - 1);
  double tail = 0.0;
  for (std::size_t k = k_max; k-- > 0;) {
    if (k + 1 < k_max) {
      q.stick_a[k] = 1.0 + nk[k];
      q.stick_b[k] = prior.alpha + tail;
    }
    tail += nk[k];
  }
  q.beta.resize(k_max);
  q.shape.resize(k_max);
  q.mean = Matrix(k_max, dims);
  q.rate = Matrix(k_max, dims);
  for (std::size_t k = 0; k < k_max; ++k) {
    q.beta[k] = prior.beta + nk[k];
    q.shape[k] = prior.shape + 0.5 * nk[k];
    for (std::size_t d = 0; d < dims; ++d) {
      const double shift = xbar(k, d) - prior.mean[d];
      q.mean(k, d) = (prior.beta * prior.mean[d] + nk[k] * xbar(k, d)) / q.beta[k];
      q.rate(k, d) = prior.rate[d] + 0.5 * (scatter(k, d) +
                                            prior.beta * nk[k] * shift * shift / q.beta[k]);
    }
  }
  return q;
}

// Fills resp and returns sum_i sum_k r_ik log rho_ik - r_ik log r_ik, i.e. the
// likelihood, assignment and entropy terms of the bound.
double e_step(std::span<const Vector> x, const Posterior& q, const Expectations& e,
              Matrix& resp) {
  const std::size_t k_max = q.beta.size();
  const std::size_t dims = q.mean.cols();
  Vector logp(k_max);
  double bound = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_max; ++k) {
      double acc = e.log_pi[k];
      for (std::size_t dd = 0; dd < dims; ++dd) {
        const double dev = x[i][dd] - q.mean(k, dd);
        acc += 0.5 * (e.log_lambda(k, dd) - kLog2Pi - 1.0 / q.beta[k] -
                      e.lambda(k, dd) * dev * dev);
      }
      logp[k] = acc;
      best = std::max(best, acc);
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < k_max; ++k) norm += std::exp(logp[k] - best);
    const double log_norm = best + std::log(norm);
    // At the optimum sum_k r (log rho - log r) collapses to the log normaliser.
    bound += log_norm;
    for (std::size_t k = 0; k < k_max; ++k) resp(i, k) = std::exp(logp[k] - log_norm);
  }
  return bound;
}

// Prior terms minus posterior entropies of the stick and component factors.
double global_terms(const Posterior& q, const Expectations& e, const Prior& p) {
  const std::size_t k_max = q.beta.size();
  const std::size_t dims = q.mean.cols();
  double bound = 0.0;
  for (std::size_t k = 0; k + 1 < k_max; ++k) {
    bound += std::log(p.alpha) + (p.alpha - 1.0) * e.log_1mv[k];
    const double a = q.stick_a[k], b = q.stick_b[k];
    bound -= std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * e.log_v[k] +
             (b - 1.0) * e.log_1mv[k];
  }
  for (std::size_t k = 0; k < k_max; ++k) {
    for (std::size_t d = 0; d < dims; ++d) {
      const double el = e.log_lambda(k, d), l = e.lambda(k, d);
      const double dm = q.mean(k, d) - p.mean[d];
      bound += 0.5 * (std::log(p.beta) - kLog2Pi) + 0.5 * el -
               0.5 * p.beta * (1.0 / q.beta[k] + l * dm * dm) + p.shape * std::log(p.rate[d]) -
               std::lgamma(p.shape) + (p.shape - 1.0) * el - p.rate[d] * l;
      bound -= 0.5 * (std::log(q.beta[k]) - kLog2Pi) + 0.5 * el - 0.5 +
               q.shape[k] * std::log(q.rate(k, d)) - std::lgamma(q.shape[k]) +
               (q.shape[k] - 1.0) * el - q.shape[k];
    }
  }
  return bound;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

// k-means++ seeding followed by nearest-seed hard assignment.
Matrix initial_responsibilities(std::span<const Vector> x, std::size_t k_max,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = x.size();
  std::vector<std::size_t> seeds;
  seeds.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  Vector dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = sq_dist(x[i], x[seeds[0]]);
  while (seeds.size() < k_max) {
    double total = 0.0;
    for (double d : dist) total += d;
    std::size_t pick;
    if (total <= 0.0) {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    } else {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        u -= dist[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    }
    seeds.push_back(pick);
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], sq_dist(x[i], x[pick]));
  }
  Matrix resp(n, k_max);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_max; ++k) {
      const double d = sq_dist(x[i], x[seeds[k]]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    resp(i, best) = 1.0;
  }
  return resp;
}

Prior make_prior(std::span<const Vector> x, const DpgmmConfig& cfg) {
  const std::size_t dims = x.front().size();
  const double n = static_cast<double>(x.size());
  Prior p;
  p.mean.assign(dims, 0.0);
  p.rate.assign(dims, 0.0);
  for (const auto& v : x) {
    for (std::size_t d = 0; d < dims; ++d) p.mean[d] += v[d] / n;
  }
  for (const auto& v : x) {
    for (std::size_t d = 0; d < dims; ++d) p.rate[d] += (v[d] - p.mean[d]) * (v[d] - p.mean[d]) / n;
  }
  p.shape = 1.0;
  p.beta = cfg.prior_precision;
  p.alpha = cfg.concentration;
  for (std::size_t d = 0; d < dims; ++d) {
    p.mean[d] *= cfg.prior_mean_scale;
    // Gamma(a0, b0) with a0 = 1 has E[1 / lambda]-scale b0: the prior variance.
    p.rate[d] = std::max(cfg.prior_var_scale * p.rate[d], cfg.var_floor) * p.shape;
  }
  return p;
}

DpgmmModel fit_once(std::span<const Vector> points, const DpgmmConfig& cfg, const Prior& prior,
                    std::uint64_t seed) {
  const std::size_t k_max = cfg.truncation;
  const std::size_t dims = points.front().size();
  Matrix resp = initial_responsibilities(points, k_max, seed);

  DpgmmModel model;
  model.weight_floor = cfg.weight_floor;
  Posterior q;
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    q = m_step(points, resp, prior, k_max);
    const Expectations e = expectations(q, k_max, dims);
    const double local = e_step(points, q, e, resp);
    const double bound = local + global_terms(q, e, prior);
    if (!std::isfinite(bound)) throw NumericError("fit_dpgmm: ELBO became non-finite");
    model.elbo_trace.push_back(bound);
    model.iterations = it + 1;
    if (it > 0 && std::abs(bound - previous) <= cfg.tol * std::abs(bound)) {
      model.converged = true;
      previous = bound;
      break;
    }
    previous = bound;
  }
  model.elbo = previous;

  // Summaries of the final factors; responsibilities were refreshed last,
  // so the mass per component reflects the final assignment.
  model.counts.assign(k_max, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t k = 0; k < k_max; ++k) model.counts[k] += resp(i, k);
  }
  model.weights.assign(k_max, 0.0);
  double remaining = 1.0;
  for (std::size_t k = 0; k < k_max; ++k) {
    if (k + 1 < k_max) {
      const double ev = q.stick_a[k] / (q.stick_a[k] + q.stick_b[k]);
      model.weights[k] = remaining * ev;
      remaining *= 1.0 - ev;
    } else {
      model.weights[k] = remaining;
    }
  }
  model.means = q.mean;
  model.variances = Matrix(k_max, dims);
  for (std::size_t k = 0; k < k_max; ++k) {
    for (std::size_t d = 0; d < dims; ++d) {
      model.variances(k, d) = std::max(q.rate(k, d) / q.shape[k], cfg.var_floor);
    }
  }
  return model;
}

}  // namespace

void DpgmmConfig::validate() const {
  if (truncation < 2) throw ConfigError("dpgmm.truncation must be >= 2");
  if (!(concentration > 0.0)) throw ConfigError("dpgmm.concentration must be > 0");
  if (!(prior_precision > 0.0)) throw ConfigError("dpgmm.prior_precision must be > 0");
  if (!(prior_var_scale > 0.0)) throw ConfigError("dpgmm.prior_var_scale must be > 0");
  if (!(tol > 0.0)) throw ConfigError("dpgmm.tol must be > 0");
  if (!(var_floor > 0.0)) throw ConfigError("dpgmm.var_floor must be > 0");
  if (!(weight_floor >= 0.0 && weight_floor < 1.0)) {
    throw ConfigError("dpgmm.weight_floor must lie in [0, 1)");
  }
  if (max_iters < 1) throw ConfigError("dpgmm.max_iters must be >= 1");
  if (restarts < 1) throw ConfigError("dpgmm.restarts must be >= 1");
}

DpgmmModel fit_dpgmm(std::span<const Vector> points, const DpgmmConfig& cfg) {
  cfg.validate();
  if (points.empty()) throw SizingError("fit_dpgmm needs at least one point");
  const std::size_t dims = points.front().size();
  if (dims == 0) throw DimensionError("fit_dpgmm: zero-dimensional points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dims) {
      throw DimensionError("fit_dpgmm: point " + std::to_string(i) + " has dimension " +
                           std::to_string(points[i].size()) + ", expected " +
                           std::to_string(dims));
    }
    for (double v : points[i]) {
      if (!std::isfinite(v)) {
        throw NumericError("fit_dpgmm: non-finite coordinate in point " + std::to_string(i));
      }
    }
  }

  const Prior prior = make_prior(points, cfg);
  DpgmmModel best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    DpgmmModel m = fit_once(points, cfg, prior, cfg.seed + r);
    if (r == 0 || m.elbo > best.elbo) best = std::move(m);
  }
  return best;
}

Vector component_log_scores(const DpgmmModel& model, std::span<const double> point) {
  if (point.size() != model.dims()) {
    throw DimensionError("predict: point has dimension " + std::to_string(point.size()) +
                         ", model expects " + std::to_string(model.dims()));
  }
  Vector scores(model.components());
  for (std::size_t k = 0; k < model.components(); ++k) {
    double acc = model.weights[k] > 0.0 ? std::log(model.weights[k])
                                        : -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < point.size(); ++d) {
      const double var = model.variances(k, d);
      const double dev = point[d] - model.means(k, d);
      acc -= 0.5 * (kLog2Pi + std::log(var) + dev * dev / var);
    }
    scores[k] = acc;
  }
  return scores;
}

std::size_t predict(const DpgmmModel& model, std::span<const double> point) {
  const Vector scores = component_log_scores(model, point);
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

std::size_t effective_components(const DpgmmModel& model) {
  std::size_t count = 0;
  for (std::size_t k = 0; k < model.components(); ++k) {
    const bool occupied = model.counts.empty() || model.counts[k] >= 0.5;
    if (model.weights[k] >= model.weight_floor && occupied) ++count;
  }
  return count;
}

double max_elbo_decrease(const DpgmmModel& model) {
  double worst = 0.0;
  for (std::size_t i = 1; i < model.elbo_trace.size(); ++i) {
    worst = std::max(worst, model.elbo_trace[i - 1] - model.elbo_trace[i]);
  }
  return worst;
}

}  // namespace statedet
