#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "statedet/error.hpp"
#include "statedet/pipeline.hpp"

namespace statedet {
namespace {

void check_stream_mode(const PipelineConfig& cfg) {
  if (cfg.mode == DetectMode::kOffline) {
    throw ConfigError("streaming needs mode adatd, acd or std (got offline)");
  }
}

double initial_tau(const PipelineConfig& cfg) {
  return cfg.mode == DetectMode::kStd ? cfg.tau_fixed : cfg.adatd.tau_init;
}

}  // namespace

StreamDetector::StreamDetector(EncoderParams encoder, PipelineConfig cfg)
    : encoder_(std::move(encoder)), cfg_(std::move(cfg)) {
  cfg_.validate();
  check_stream_mode(cfg_);
  tau_ = initial_tau(cfg_);
}

StreamDetector::StreamDetector(EncoderParams encoder, PipelineConfig cfg, DpgmmModel frozen)
    : StreamDetector(std::move(encoder), std::move(cfg)) {
  frozen_ = std::move(frozen);
}

StreamDetector::StreamDetector(PipelineConfig cfg, ClusterFn cluster)
    : cfg_(std::move(cfg)), custom_(std::move(cluster)) {
  cfg_.validate();
  check_stream_mode(cfg_);
  tau_ = initial_tau(cfg_);
}

Label StreamDetector::step(const Window& window) {
  if (!encoder_) throw ConfigError("StreamDetector was built without an encoder");
  const Embedding e = encode_window(*encoder_, cfg_.stage, window.data);
  return step_embedding(e.z);
}

double StreamDetector::similarity(std::span<const double> a, std::span<const double> b) const {
  const double raw = dot(a, b);
  if (!cfg_.normalize_similarity) return raw;
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  return na > 0.0 && nb > 0.0 ? raw / (na * nb) : 0.0;
}

Label StreamDetector::step_embedding(std::span<const double> z) {
  StepRecord rec;
  rec.index = windows_seen_++;

  if (buffer_.size() < cfg_.buffer_cap) {
    buffer_.emplace_back(z.begin(), z.end());
  } else {
    buffer_[buffer_head_].assign(z.begin(), z.end());
    buffer_head_ = (buffer_head_ + 1) % cfg_.buffer_cap;
  }

  if (rec.index == 0) {
    rec.similarity = std::numeric_limits<double>::quiet_NaN();
    rec.clustered = true;
    rec.cluster_outcome = rec.state = cluster(z);
    z_pre_.assign(z.begin(), z.end());
    s_pre_ = rec.state;
    rec.tau = tau_;
    trace_.push_back(rec);
    return rec.state;
  }

  rec.similarity = similarity(z_pre_, z);
  const bool adaptive = cfg_.mode == DetectMode::kAdatd;
  const bool always = cfg_.mode == DetectMode::kAcd;

  if (!always && rec.similarity >= tau_) {
    rec.state = s_pre_;
    if (adaptive) tau_ *= 1.0 + cfg_.adatd.delta_inc;
  } else {
    rec.clustered = true;
    rec.cluster_outcome = rec.state = cluster(z);
    if (rec.state != s_pre_) {
      z_pre_.assign(z.begin(), z.end());
      s_pre_ = rec.state;
      if (adaptive) tau_ *= 1.0 + cfg_.adatd.delta_inc;
    } else if (adaptive) {
      tau_ *= 1.0 - cfg_.adatd.delta_dec;
    }
  }
  rec.tau = tau_;
  trace_.push_back(rec);
  return rec.state;
}

Label StreamDetector::cluster(std::span<const double> z) {
  ++clustering_ops_;
  if (custom_) return custom_(z);
  if (frozen_) return static_cast<Label>(predict(*frozen_, z));
  return refit_and_assign(z);
}

Label StreamDetector::refit_and_assign(std::span<const double> z) {
  const DpgmmModel model = fit_dpgmm(buffer_, cfg_.dpgmm);
  const std::size_t predicted = predict(model, z);

  std::vector<std::size_t> present;
  for (std::size_t k = 0; k < model.components(); ++k) {
    if (k == predicted || model.counts[k] >= 0.5) present.push_back(k);
  }

  // Candidate (component, previous anchor) pairs inside the anchor's 3-sigma
  // box, claimed one-to-one in order of increasing distance.
  struct Candidate {
    double dist;
    std::size_t comp;
    std::size_t anchor;
  };
  std::vector<Candidate> candidates;
  for (std::size_t k : present) {
    auto mean = model.means.row(k);
    auto var = model.variances.row(k);
    for (std::size_t a = 0; a < anchors_.size(); ++a) {
      bool within = true;
      double dist = 0.0;
      for (std::size_t d = 0; d < mean.size(); ++d) {
        const double dev = mean[d] - anchors_[a].mean[d];
        const double sigma = std::sqrt(std::max(var[d], anchors_[a].variance[d]));
        if (std::abs(dev) > 3.0 * sigma) within = false;
        dist += dev * dev;
      }
      if (within) candidates.push_back({dist, k, a});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.dist < y.dist; });

  std::vector<Label> label_of(model.components(), -1);
  std::vector<bool> claimed(anchors_.size(), false);
  for (const auto& c : candidates) {
    if (label_of[c.comp] >= 0 || claimed[c.anchor]) continue;
    label_of[c.comp] = anchors_[c.anchor].label;
    claimed[c.anchor] = true;
  }

  for (std::size_t k : present) {
    auto mean = model.means.row(k);
    auto var = model.variances.row(k);
    LabelAnchor fresh{Vector(mean.begin(), mean.end()), Vector(var.begin(), var.end()), 0};
    if (label_of[k] < 0) {
      label_of[k] = next_label_++;
      fresh.label = label_of[k];
      anchors_.push_back(std::move(fresh));
    } else {
      for (auto& a : anchors_) {
        if (a.label == label_of[k]) {
          a.mean = std::move(fresh.mean);
          a.variance = std::move(fresh.variance);
          break;
        }
      }
    }
  }
  return label_of[predicted];
}

StreamResult stream_run(const MultivariateTimeSeries& series, const EncoderParams& encoder,
                        const PipelineConfig& cfg, const DpgmmModel* frozen) {
  const auto t0 = std::chrono::steady_clock::now();
  StreamDetector det = frozen ? StreamDetector(encoder, cfg, *frozen) : StreamDetector(encoder, cfg);
  StreamResult out;
  auto& res = out.detection;
  res.window_starts = covering_starts(series.length(), cfg.windows);
  res.window_labels.reserve(res.window_starts.size());
  for (std::size_t s : res.window_starts) {
    res.window_labels.push_back(det.step(extract_window(series, s, cfg.windows.window_size)));
  }
  res.states = assemble_states(series.length(), cfg.windows.window_size, res.window_starts,
                               res.window_labels);
  res.stats.clustering_ops = det.clustering_ops();
  res.stats.windows_seen = det.windows_seen();
  res.stats.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.trace = det.trace();
  return out;
}

}  // namespace statedet
