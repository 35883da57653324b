#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "statedet/error.hpp"
#include "statedet/fncc.hpp"
#include "statedet/synthgen.hpp"

using namespace statedet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MultivariateTimeSeries noise_series(std::size_t n, std::size_t t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return MultivariateTimeSeries(oracle::random_matrix(n, t, rng));
}

Embedding emb(Vector z) {
  Embedding e;
  e.z_trend = Vector(z.size(), 0.0);
  e.z_seasonal = Vector(z.size(), 0.0);
  e.z = std::move(z);
  return e;
}

GroupSummary summary(Vector trend, Vector seasonal) {
  return {Vector(trend.size(), 0.0), std::move(trend), std::move(seasonal)};
}

double neg_log_sigmoid(double x) { return std::log(1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("group sampling", "[fncc]") {
  const auto s = noise_series(2, 3000, 1);
  const SlidingWindowConfig swc{128, 50};
  TrainConfig cfg;
  std::mt19937_64 rng(9);
  const auto groups = sample_groups(s, swc, cfg, rng);
  REQUIRE(groups.size() == 20);
  std::size_t total = 0;
  std::vector<std::size_t> anchors;
  for (const auto& g : groups) {
    total += g.windows.size();
    anchors.push_back(g.anchor);
    REQUIRE(g.anchor + 128 + 3 * 50 <= 3000);
    for (std::size_t v = 0; v < g.windows.size(); ++v) {
      REQUIRE(g.windows[v].start == g.anchor + v * 50);
      REQUIRE(g.windows[v].length() == 128);
    }
  }
  REQUIRE(total == 80);
  std::sort(anchors.begin(), anchors.end());
  REQUIRE(std::adjacent_find(anchors.begin(), anchors.end()) == anchors.end());

  std::mt19937_64 again(9);
  const auto groups2 = sample_groups(s, swc, cfg, again);
  for (std::size_t i = 0; i < groups.size(); ++i) REQUIRE(groups2[i].anchor == groups[i].anchor);

  // Exactly one valid anchor.
  const auto tight = noise_series(2, 128 + 3 * 50, 2);
  std::mt19937_64 r3(1);
  const auto one = sample_groups(tight, swc, cfg, r3);
  REQUIRE(one.size() == 1);
  REQUIRE(one[0].anchor == 0);

  const auto short_series = noise_series(2, 128 + 3 * 50 - 1, 2);
  REQUIRE_THROWS_AS(sample_groups(short_series, swc, cfg, r3), SizingError);
}

TEST_CASE("pair scores", "[fncc]") {
  std::vector<GroupSummary> sums;
  for (int i = 0; i < 20; ++i) sums.push_back(summary({1.0, double(i)}, {0.5, 1.0}));
  const auto scores = pair_scores(sums);
  REQUIRE(scores.size() == 190);
  REQUIRE(scores.front().i == 0);
  REQUIRE(scores.front().j == 1);

  const auto hand = pair_scores(std::vector{summary({1, 2}, {1, 0}), summary({3, -1}, {2, 0})});
  REQUIRE(hand.size() == 1);
  REQUIRE(hand[0].sim_trend == 1.0);
  REQUIRE(hand[0].sim_seasonal == 2.0);
  REQUIRE(hand[0].sim_overall == 2.0);

  const auto ortho = pair_scores(std::vector{summary({1, 0}, {4, 4}), summary({0, 7}, {1, 1})});
  REQUIRE(ortho[0].sim_trend == 0.0);
  REQUIRE(ortho[0].sim_overall == 0.0);
  REQUIRE_THROWS_AS(pair_scores(std::vector{summary({1}, {1})}), SizingError);
}

TEST_CASE("negative filtering keeps the least similar pairs", "[fncc]") {
  std::vector<PairScore> scores;
  const double crafted[] = {5, 1, 3, 2, 4, 0};
  std::size_t idx = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) scores.push_back({i, j, 0, 0, crafted[idx++]});
  }
  const auto kept = filter_negatives(scores, 0.5);
  REQUIRE(kept == std::vector<GroupPair>{{2, 3}, {0, 2}, {1, 2}});
  REQUIRE(filter_negatives(scores, 1.0).size() == 6);
  REQUIRE(filter_negatives(scores, 0.01).size() == 1);

  std::vector<PairScore> many;
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = i + 1; j < 20; ++j) many.push_back({i, j, 0, 0, 1.0});
  }
  const auto half = filter_negatives(many, 0.5);
  REQUIRE(half.size() == 95);
  // All tied: lexicographic order decides.
  REQUIRE(half.front() == GroupPair{0, 1});

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(-2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto& p : many) p.sim_overall = std::round(ud(rng) * 4) / 4;
    const double lambda = 0.05 + 0.9 * (ud(rng) + 2) / 4;
    const auto got = filter_negatives(many, lambda);
    auto sorted = many;
    std::sort(sorted.begin(), sorted.end(), [](const PairScore& a, const PairScore& b) {
      return std::tie(a.sim_overall, a.i, a.j) < std::tie(b.sim_overall, b.i, b.j);
    });
    const auto want = std::max<std::size_t>(1, static_cast<std::size_t>(lambda * 190));
    REQUIRE(got.size() == want);
    for (std::size_t k = 0; k < want; ++k) REQUIRE(got[k] == GroupPair{sorted[k].i, sorted[k].j});
  }
}

TEST_CASE("contrastive loss values", "[fncc]") {
  GroupEmbeddings zeros(3, std::vector<Embedding>(4, emb({0, 0, 0})));
  const auto l0 = loss_fncc(zeros, std::vector<GroupPair>{{0, 1}, {1, 2}});
  REQUIRE_THAT(l0.pos, WithinAbs(std::log(2.0), 1e-15));
  REQUIRE_THAT(l0.neg, WithinAbs(std::log(2.0), 1e-15));
  REQUIRE_THAT(l0.total, WithinAbs(2 * std::log(2.0), 1e-15));

  const double r = std::sqrt(30.0);
  GroupEmbeddings aligned{{emb({r, 0}), emb({r, 0})}, {emb({0, r}), emb({0, r})}};
  REQUIRE(loss_fncc(aligned, std::vector<GroupPair>{{0, 1}}).pos < 1e-12);

  // U = V = 2, D = 2 by hand.
  const Vector a0{0.5, -1.0}, a1{0.3, 0.8}, b0{-0.2, 0.4}, b1{1.5, 0.1};
  GroupEmbeddings g{{emb(a0), emb(a1)}, {emb(b0), emb(b1)}};
  const double pos = (neg_log_sigmoid(a0[0] * a1[0] + a0[1] * a1[1]) +
                      neg_log_sigmoid(b0[0] * b1[0] + b0[1] * b1[1])) / 2.0;
  const double da[] = {(a0[0] + a1[0]) / 2, (a0[1] + a1[1]) / 2};
  const double db[] = {(b0[0] + b1[0]) / 2, (b0[1] + b1[1]) / 2};
  const double neg = neg_log_sigmoid(-(da[0] * db[0] + da[1] * db[1]));
  const auto l = loss_fncc(g, std::vector<GroupPair>{{0, 1}});
  REQUIRE_THAT(l.pos, WithinRel(pos, 1e-13));
  REQUIRE_THAT(l.neg, WithinRel(neg, 1e-13));
  REQUIRE_THAT(l.total, WithinRel(pos + neg, 1e-13));

  REQUIRE(softplus(800.0) == 800.0);
  REQUIRE(std::isfinite(softplus(-800.0)));
  REQUIRE(logistic(-800.0) >= 0.0);
  REQUIRE_THROWS_AS(loss_fncc(g, std::vector<GroupPair>{}), SizingError);
}

TEST_CASE("loss is symmetric in group and window order", "[fncc][property]") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t u = 2 + rng() % 5, v = 2 + rng() % 4, d = 1 + rng() % 5;
    GroupEmbeddings g(u);
    for (auto& grp : g) {
      for (std::size_t w = 0; w < v; ++w) {
        Vector z(d);
        for (auto& x : z) x = nd(rng);
        grp.push_back(emb(z));
      }
    }
    std::vector<GroupPair> neg;
    for (std::size_t i = 0; i < u; ++i) {
      for (std::size_t j = i + 1; j < u; ++j) {
        if (rng() % 2 || neg.empty()) neg.push_back({i, j});
      }
    }
    const double base = loss_fncc(g, neg).total;

    std::vector<std::size_t> perm(u);
    for (std::size_t i = 0; i < u; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    // perm[new] = old; remap pair indices to the new positions.
    std::vector<std::size_t> where(u);
    GroupEmbeddings shuffled(u);
    for (std::size_t k = 0; k < u; ++k) {
      shuffled[k] = g[perm[k]];
      where[perm[k]] = k;
      std::shuffle(shuffled[k].begin(), shuffled[k].end(), rng);
    }
    std::vector<GroupPair> moved;
    for (const auto& [a, b] : neg) {
      moved.push_back({std::min(where[a], where[b]), std::max(where[a], where[b])});
    }
    REQUIRE_THAT(loss_fncc(shuffled, moved).total, WithinRel(base, 1e-12));
  }
}

TEST_CASE("loss gradient through the encoder matches finite differences", "[fncc][gradient]") {
  SynthConfig sc;
  sc.num_states = 3;
  sc.length = 3000;
  sc.seed = 3;
  const auto syn = generate_synthetic(sc);
  EncoderConfig ec;
  ec.input_dims = sc.dims;
  ec.seed = 3;
  const auto p = init_encoder(ec);
  const SlidingWindowConfig swc{128, 50};
  const EmbeddingStage stage;
  TrainConfig tc;
  tc.groups = 6;
  std::mt19937_64 rng(1);
  const auto groups = sample_groups(syn.series, swc, tc, rng);
  std::vector<Window> batch;
  for (const auto& g : groups) batch.insert(batch.end(), g.windows.begin(), g.windows.end());
  const std::size_t v = tc.group_size;

  std::vector<GroupPair> neg;
  auto loss = [&](const EncoderParams& q, std::vector<ForwardTrace>* tr,
                  std::vector<std::vector<Vector>>* gz) {
    const auto flat = encode_windows(q, stage, batch, tr);
    GroupEmbeddings grouped(groups.size());
    std::vector<GroupSummary> sums;
    for (std::size_t k = 0; k < groups.size(); ++k) {
      grouped[k].assign(flat.begin() + static_cast<std::ptrdiff_t>(k * v),
                        flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * v));
      sums.push_back(summarize(grouped[k]));
    }
    // Selection frozen after the first evaluation.
    if (neg.empty()) neg = filter_negatives(pair_scores(sums), tc.fraction);
    return loss_fncc(grouped, neg, gz).total;
  };

  std::vector<ForwardTrace> traces;
  std::vector<std::vector<Vector>> gz;
  loss(p, &traces, &gz);
  std::vector<Vector> flat_grad;
  for (auto& g : gz) flat_grad.insert(flat_grad.end(), g.begin(), g.end());
  auto grads = backward(p, traces, flat_grad);
  const auto analytic = gradient_tensors(grads);

  double worst = 0.0;
  const double h = 1e-5;
  for (std::size_t ti = 0; ti < analytic.size(); ++ti) {
    for (std::size_t i = 0; i < analytic[ti].size(); ++i) {
      auto up = p, down = p;
      trainable_tensors(up)[ti][i] += h;
      trainable_tensors(down)[ti][i] -= h;
      const double fd = (loss(up, nullptr, nullptr) - loss(down, nullptr, nullptr)) / (2 * h);
      const double a = analytic[ti][i];
      worst = std::max(worst, std::abs(a - fd) / std::max({1e-6, std::abs(a), std::abs(fd)}));
    }
  }
  REQUIRE(worst < 1e-4);
}

TEST_CASE("Adam", "[fncc]") {
  Vector w{1.0, -2.0, 3.0}, g(3, 0.0);
  const Vector keep = w;
  Adam adam(0.1, 0.9, 0.999, 1e-8);
  for (int i = 0; i < 5; ++i) adam.step({std::span<double>(w)}, {std::span<double>(g)});
  REQUIRE(w == keep);

  // First step moves each coordinate by lr against the gradient sign.
  Vector x{0.0, 0.0}, gx{2.0, -0.5};
  Adam fresh(0.01, 0.9, 0.999, 1e-12);
  fresh.step({std::span<double>(x)}, {std::span<double>(gx)});
  REQUIRE_THAT(x[0], WithinAbs(-0.01, 1e-9));
  REQUIRE_THAT(x[1], WithinAbs(0.01, 1e-9));
}

TEST_CASE("training", "[fncc][slow]") {
  SynthConfig sc;
  sc.num_states = 2;
  sc.length = 2400;
  sc.min_duration = 300;
  sc.max_duration = 600;
  sc.seed = 8;
  const auto syn = generate_synthetic(sc);
  EncoderConfig ec;
  ec.input_dims = sc.dims;
  ec.seed = 2;
  TrainConfig tc;
  tc.epochs = 3;
  tc.steps_per_epoch = 20;
  tc.seed = 5;
  const SlidingWindowConfig swc{128, 50};
  const EmbeddingStage stage;
  const auto init = init_encoder(ec);

  // Calibrated start, as the pipeline trains.
  const auto run = fit_encoder(syn.series, swc, stage, ec, tc, true);
  REQUIRE(run.history.size() == 60);
  REQUIRE(run.params.conv_trend.weight == init.conv_trend.weight);
  REQUIRE(run.params.conv_seasonal.weight == init.conv_seasonal.weight);
  REQUIRE_FALSE(run.params.conv_trend.bias == init.conv_trend.bias);
  REQUIRE_FALSE(run.params.fusion == init.fusion);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    first += run.history[i].total;
    last += run.history[run.history.size() - 1 - i].total;
  }
  REQUIRE(last < first);
  for (const auto& l : run.history) REQUIRE_THAT(l.total, WithinAbs(l.pos + l.neg, 1e-12));

  const auto again = fit_encoder(syn.series, swc, stage, ec, tc, true);
  REQUIRE(again.params == run.params);

  const auto plain = train(syn.series, swc, init, stage, tc);
  REQUIRE(plain.params.conv_trend == init.conv_trend);
  REQUIRE(plain.params.conv_seasonal == init.conv_seasonal);

  REQUIRE(resolved_steps_per_epoch(TrainConfig{}, swc, 10000) == kMinStepsPerEpoch);
  REQUIRE(resolved_steps_per_epoch(TrainConfig{}, swc, 400000) == 100);
  REQUIRE(resolved_group_stride(TrainConfig{}, swc) == 50);

  EncoderConfig wrong = ec;
  wrong.input_dims = 3;
  REQUIRE_THROWS_AS(train(syn.series, swc, init_encoder(wrong), stage, tc), DimensionError);
}
