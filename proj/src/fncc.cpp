#include "statedet/fncc.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <unordered_set>

#include "statedet/error.hpp"

namespace statedet {

void TrainConfig::validate() const {
  if (groups < 2) throw ConfigError("train.groups must be >= 2");
  if (group_size < 2) throw ConfigError("train.group_size must be >= 2");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("train.fraction must lie in (0, 1]");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train.adam_beta1 and train.adam_beta2 must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("train.adam_epsilon must be > 0");
}

std::size_t resolved_group_stride(const TrainConfig& cfg, const SlidingWindowConfig& swc) {
  return cfg.group_stride ? cfg.group_stride : swc.step_size;
}

std::size_t resolved_steps_per_epoch(const TrainConfig& cfg, const SlidingWindowConfig& swc,
                                     std::size_t series_length) {
  if (cfg.steps_per_epoch) return cfg.steps_per_epoch;
  const std::size_t per_batch = cfg.groups * cfg.group_size * swc.step_size;
  return std::max(kMinStepsPerEpoch, series_length / per_batch);
}

std::vector<WindowGroup> sample_groups(const MultivariateTimeSeries& series,
                                       const SlidingWindowConfig& swc, const TrainConfig& cfg,
                                       std::mt19937_64& rng) {
  swc.validate();
  cfg.validate();
  const std::size_t stride = resolved_group_stride(cfg, swc);
  const std::size_t span = swc.window_size + (cfg.group_size - 1) * stride;
  if (span > series.length()) {
    throw SizingError("series of length " + std::to_string(series.length()) +
                      " is too short for a group of " + std::to_string(cfg.group_size) +
                      " windows (needs " + std::to_string(span) + ")");
  }
  const std::size_t anchors = series.length() - span + 1;
  std::size_t count = cfg.groups;
  if (anchors < count) {
    std::clog << "warning: only " << anchors << " group anchors available, using " << anchors
              << " groups instead of " << cfg.groups << '\n';
    count = anchors;
  }

  std::vector<std::size_t> picked;
  picked.reserve(count);
  if (count == anchors) {
    for (std::size_t a = 0; a < anchors; ++a) picked.push_back(a);
    std::shuffle(picked.begin(), picked.end(), rng);
  } else {
    std::uniform_int_distribution<std::size_t> dist(0, anchors - 1);
    std::unordered_set<std::size_t> seen;
    while (picked.size() < count) {
      std::size_t a = dist(rng);
      if (seen.insert(a).second) picked.push_back(a);
    }
  }

  std::vector<WindowGroup> groups;
  groups.reserve(count);
  for (std::size_t a : picked) {
    WindowGroup g{a, {}};
    for (std::size_t v = 0; v < cfg.group_size; ++v) {
      g.windows.push_back(extract_window(series, a + v * stride, swc.window_size));
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

GroupSummary summarize(std::span<const Embedding> group) {
  if (group.empty()) throw SizingError("cannot summarize an empty group");
  const std::size_t d = group.front().z.size();
  GroupSummary s{Vector(d, 0.0), Vector(d, 0.0), Vector(d, 0.0)};
  for (const auto& e : group) {
    for (std::size_t i = 0; i < d; ++i) {
      s.d[i] += e.z[i];
      s.d_trend[i] += e.z_trend[i];
      s.d_seasonal[i] += e.z_seasonal[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(group.size());
  for (std::size_t i = 0; i < d; ++i) {
    s.d[i] *= inv;
    s.d_trend[i] *= inv;
    s.d_seasonal[i] *= inv;
  }
  return s;
}

std::vector<PairScore> pair_scores(std::span<const GroupSummary> summaries) {
  if (summaries.size() < 2) throw SizingError("pair_scores needs at least two groups");
  std::vector<PairScore> out;
  out.reserve(summaries.size() * (summaries.size() - 1) / 2);
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    for (std::size_t j = i + 1; j < summaries.size(); ++j) {
      PairScore p{i, j, dot(summaries[i].d_trend, summaries[j].d_trend),
                  dot(summaries[i].d_seasonal, summaries[j].d_seasonal), 0.0};
      p.sim_overall = p.sim_trend * p.sim_seasonal;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<GroupPair> filter_negatives(std::span<const PairScore> scores, double fraction) {
  if (scores.empty()) throw SizingError("filter_negatives needs at least one pair");
  std::vector<PairScore> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const PairScore& a, const PairScore& b) {
    if (a.sim_overall != b.sim_overall) return a.sim_overall < b.sim_overall;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  auto keep = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(scores.size())));
  keep = std::clamp<std::size_t>(keep, 1, scores.size());
  std::vector<GroupPair> out;
  out.reserve(keep);
  for (std::size_t k = 0; k < keep; ++k) out.push_back({sorted[k].i, sorted[k].j});
  return out;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LossValue loss_fncc(const GroupEmbeddings& groups, std::span<const GroupPair> negatives,
                    std::vector<std::vector<Vector>>* grad_z) {
  if (groups.empty() || negatives.empty()) {
    throw SizingError("loss_fncc needs groups and at least one negative pair");
  }
  const std::size_t u = groups.size();
  const std::size_t v = groups.front().size();
  const std::size_t d = groups.front().front().z.size();
  if (grad_z) {
    grad_z->assign(u, std::vector<Vector>(v, Vector(d, 0.0)));
  }

  LossValue loss;
  const double m = static_cast<double>(u * v * (v - 1) / 2);
  for (std::size_t k = 0; k < u; ++k) {
    if (groups[k].size() != v) throw DimensionError("loss_fncc: groups differ in size");
    for (std::size_t i = 0; i < v; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const auto& zi = groups[k][i].z;
        const auto& zj = groups[k][j].z;
        const double s = dot(zi, zj);
        loss.pos += softplus(-s);
        if (grad_z) {
          const double g = -logistic(-s) / m;
          auto& gi = (*grad_z)[k][i];
          auto& gj = (*grad_z)[k][j];
          for (std::size_t c = 0; c < d; ++c) {
            gi[c] += g * zj[c];
            gj[c] += g * zi[c];
          }
        }
      }
    }
  }
  loss.pos /= m;

  std::vector<Vector> centroids(u);
  for (std::size_t k = 0; k < u; ++k) centroids[k] = summarize(groups[k]).d;
  const double jn = static_cast<double>(negatives.size());
  const double inv_v = 1.0 / static_cast<double>(v);
  for (const auto& [a, b] : negatives) {
    const double s = dot(centroids[a], centroids[b]);
    loss.neg += softplus(s);
    if (grad_z) {
      const double g = logistic(s) / jn * inv_v;
      for (std::size_t w = 0; w < v; ++w) {
        auto& ga = (*grad_z)[a][w];
        auto& gb = (*grad_z)[b][w];
        for (std::size_t c = 0; c < d; ++c) {
          ga[c] += g * centroids[b][c];
          gb[c] += g * centroids[a][c];
        }
      }
    }
  }
  loss.neg /= jn;
  loss.total = loss.pos + loss.neg;
  return loss;
}

void Adam::step(const std::vector<std::span<double>>& params,
                const std::vector<std::span<double>>& grads) {
  if (params.size() != grads.size()) throw DimensionError("Adam: parameter/gradient mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    if (p.size() != g.size() || p.size() != m_[k].size()) {
      throw DimensionError("Adam: tensor shape changed between steps");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g[i];
      v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr_ * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + eps_);
    }
  }
}

TrainResult train(const MultivariateTimeSeries& series, const SlidingWindowConfig& swc,
                  EncoderParams params, const EmbeddingStage& stage, const TrainConfig& cfg) {
  cfg.validate();
  swc.validate();
  if (series.dims() != params.config.input_dims) {
    throw DimensionError("encoder expects " + std::to_string(params.config.input_dims) +
                         " variates, series has " + std::to_string(series.dims()));
  }
  const std::size_t steps = cfg.epochs * resolved_steps_per_epoch(cfg, swc, series.length());
  std::mt19937_64 rng(cfg.seed);
  Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);

  TrainResult result;
  result.history.reserve(steps);
  std::vector<Window> batch;
  std::vector<ForwardTrace> traces;
  for (std::size_t step = 0; step < steps; ++step) {
    auto groups = sample_groups(series, swc, cfg, rng);
    const std::size_t u = groups.size();
    const std::size_t v = cfg.group_size;
    batch.clear();
    for (auto& g : groups) {
      for (auto& w : g.windows) batch.push_back(std::move(w));
    }
    std::vector<Embedding> flat = encode_windows(params, stage, batch, &traces);

    GroupEmbeddings grouped(u);
    std::vector<GroupSummary> summaries;
    summaries.reserve(u);
    for (std::size_t k = 0; k < u; ++k) {
      grouped[k].assign(flat.begin() + static_cast<std::ptrdiff_t>(k * v),
                        flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * v));
      summaries.push_back(summarize(grouped[k]));
    }
    const auto negatives = filter_negatives(pair_scores(summaries), cfg.fraction);

    std::vector<std::vector<Vector>> grad_grouped;
    LossValue loss = loss_fncc(grouped, negatives, &grad_grouped);
    if (!std::isfinite(loss.total)) {
      throw NumericError("non-finite contrastive loss at step " + std::to_string(step) +
                         " (pos=" + std::to_string(loss.pos) + ", neg=" +
                         std::to_string(loss.neg) + ")");
    }
    std::vector<Vector> grad_flat;
    grad_flat.reserve(u * v);
    for (auto& g : grad_grouped) {
      for (auto& w : g) grad_flat.push_back(std::move(w));
    }
    EncoderGradients grads = backward(params, traces, grad_flat);
    adam.step(trainable_tensors(params), gradient_tensors(grads));
    result.history.push_back(loss);
  }
  result.params = std::move(params);
  return result;
}

TrainResult fit_encoder(const MultivariateTimeSeries& series, const SlidingWindowConfig& swc,
                        const EmbeddingStage& stage, const EncoderConfig& encoder_cfg,
                        const TrainConfig& cfg, bool calibrate) {
  EncoderParams params = init_encoder(encoder_cfg);
  if (calibrate) {
    const auto lattice = windows(series, swc);
    calibrate_conv_bias(params, stage, lattice);
  }
  return train(series, swc, std::move(params), stage, cfg);
}

}  // namespace statedet
