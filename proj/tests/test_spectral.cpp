#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "statedet/error.hpp"
#include "statedet/spectral.hpp"

using namespace statedet;
using Catch::Matchers::WithinAbs;

namespace {

double band_energy_brute(const Spectrum& s, std::size_t k, std::size_t q) {
  double e = 0.0;
  for (std::size_t i = k; i < k + q; ++i) {
    for (std::size_t n = 0; n < s.dims(); ++n) {
      e += s(n, i).real() * s(n, i).real() + s(n, i).imag() * s(n, i).imag();
    }
  }
  return e;
}

}  // namespace

TEST_CASE("forward transform of simple signals", "[spectral]") {
  const Spectrum dc = forward_rdft(Matrix(2, 9, 3.0));
  REQUIRE(dc.bins() == 5);
  REQUIRE_THAT(dc(1, 0).real(), WithinAbs(27.0, 1e-12));
  for (std::size_t k = 1; k < dc.bins(); ++k) REQUIRE(std::abs(dc(0, k)) < 1e-12);

  const Spectrum zero = forward_rdft(Matrix(3, 16));
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t k = 0; k < zero.bins(); ++k) REQUIRE(std::abs(zero(n, k)) == 0.0);
  }
  REQUIRE_THROWS_AS(forward_rdft(Matrix(1, 1)), SizingError);
}

TEST_CASE("fft matches the direct sum for many lengths", "[spectral][oracle]") {
  std::mt19937_64 rng(11);
  for (std::size_t p = 2; p <= 97; ++p) {
    const Matrix x = oracle::random_matrix(2, p, rng);
    const Spectrum s = forward_rdft(x);
    REQUIRE(s.bins() == p / 2 + 1);
    for (std::size_t n = 0; n < 2; ++n) {
      const auto ref = oracle::dft_row(x.row(n));
      for (std::size_t k = 0; k < ref.size(); ++k) {
        REQUIRE(std::abs(s(n, k) - ref[k]) <= 1e-9 * std::max(1.0, std::abs(ref[k])));
      }
    }
    const Matrix back = inverse_rdft(s, p);
    REQUIRE(oracle::max_rel_err(back.flat(), x.flat()) < 1e-9);
  }
}

TEST_CASE("inverse transform conventions", "[spectral]") {
  Spectrum dc(1, 5, 8);
  dc(0, 0) = 4.0;
  const Matrix flat = inverse_rdft(dc, 8);
  for (double v : flat.flat()) REQUIRE_THAT(v, WithinAbs(0.5, 1e-12));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Spectrum s(1, 5, 8);
  std::vector<oracle::cplx> half(5);
  for (std::size_t k = 0; k < 5; ++k) {
    half[k] = {nd(rng), (k == 0 || k == 4) ? 0.0 : nd(rng)};
    s(0, k) = half[k];
  }
  const Matrix x = inverse_rdft(s, 8);
  const auto ref = oracle::idft_row(half, 8);
  REQUIRE(oracle::max_rel_err(x.row(0), ref) < 1e-9);

  REQUIRE_THROWS_AS(inverse_rdft(Spectrum(1, 5, 8), 12), SizingError);
}

TEST_CASE("Parseval and linearity", "[spectral][property]") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 2 + rng() % 100;
    const Matrix x = oracle::random_matrix(3, p, rng);
    const Spectrum s = forward_rdft(x);
    for (std::size_t n = 0; n < 3; ++n) {
      double time = 0.0;
      for (double v : x.row(n)) time += v * v;
      double freq = std::norm(s(n, 0));
      for (std::size_t k = 1; k < s.bins(); ++k) {
        const bool nyquist = p % 2 == 0 && k == s.bins() - 1;
        freq += (nyquist ? 1.0 : 2.0) * std::norm(s(n, k));
      }
      freq /= static_cast<double>(p);
      REQUIRE(std::abs(time - freq) <= 1e-8 * time);
    }

    const Matrix y = oracle::random_matrix(3, p, rng);
    const double a = 1.7, b = -0.3;
    Matrix mix(3, p);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.flat()[i] = a * x.flat()[i] + b * y.flat()[i];
    const Spectrum sm = forward_rdft(mix), sy = forward_rdft(y);
    for (std::size_t n = 0; n < 3; ++n) {
      for (std::size_t k = 0; k < s.bins(); ++k) {
        REQUIRE(std::abs(sm(n, k) - (a * s(n, k) + b * sy(n, k))) < 1e-9 * (1.0 + std::abs(sm(n, k))));
      }
    }
  }
}

TEST_CASE("cumulative energy", "[spectral]") {
  Spectrum one_hot(1, 10, 18);
  one_hot(0, 5) = {0.0, 2.0};
  const Vector e = cumulative_energy(one_hot, {3});
  REQUIRE(e.size() == 8);
  for (std::size_t k = 0; k < e.size(); ++k) {
    REQUIRE(e[k] == ((k >= 3 && k <= 5) ? 4.0 : 0.0));
  }

  Spectrum uniform(2, 9, 16);
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t k = 0; k < 9; ++k) uniform(n, k) = std::polar(1.5, 0.3 * static_cast<double>(k));
  }
  const Vector eu = cumulative_energy(uniform, {4});
  for (double v : eu) REQUIRE_THAT(v, WithinAbs(eu.front(), 1e-12));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    Spectrum s(1 + rng() % 4, 8, 14);
    for (std::size_t n = 0; n < s.dims(); ++n) {
      for (std::size_t k = 0; k < 8; ++k) s(n, k) = {nd(rng), nd(rng)};
    }
    const Vector ev = cumulative_energy(s, {3});
    REQUIRE(ev.size() == 6);
    for (std::size_t k = 0; k < ev.size(); ++k) {
      REQUIRE_THAT(ev[k], WithinAbs(band_energy_brute(s, k, 3), 1e-12));
    }
  }
  REQUIRE_THROWS_AS(cumulative_energy(uniform, {10}), ConfigError);
  REQUIRE_THROWS_AS(cumulative_energy(uniform, {1}), ConfigError);
}

TEST_CASE("band selection takes the first maximum", "[spectral]") {
  REQUIRE(select_band(Vector{0, 0, 4, 4, 4, 0, 0, 0}) == 2);
  REQUIRE(select_band(Vector(6, 1.0)) == 0);

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Vector v(1 + rng() % 30);
    for (auto& x : v) x = static_cast<double>(rng() % 7);
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] > v[best]) best = i;
    }
    REQUIRE(select_band(v) == best);
  }
}

TEST_CASE("chosen band beats every other placement", "[spectral][property]") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 8 + rng() % 120;
    const Matrix x = oracle::random_matrix(1 + rng() % 3, p, rng);
    const Spectrum s = forward_rdft(x);
    const std::size_t q = 2 + rng() % (s.bins() - 1);
    const CompressedWindow cw = compress(x, {q});
    REQUIRE(cw.band_start <= s.bins() - q);
    const double chosen = band_energy_brute(s, cw.band_start, q);
    for (std::size_t k = 0; k + q <= s.bins(); ++k) {
      REQUIRE(chosen >= band_energy_brute(s, k, q) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("compression output shapes", "[spectral]") {
  std::mt19937_64 rng(8);
  const CompressedWindow cw = compress(oracle::random_matrix(4, 480, rng), {41});
  REQUIRE(cw.data.cols() == 80);
  REQUIRE(cw.data.rows() == 4);
  REQUIRE(cw.bandwidth == 41);

  // Odd input still yields the even length 2(Q - 1).
  REQUIRE(compress(oracle::random_matrix(2, 129, rng), {33}).data.cols() == 64);
}

TEST_CASE("full-width band is the identity", "[spectral]") {
  std::mt19937_64 rng(13);
  for (std::size_t p : {8u, 32u, 128u}) {
    const Matrix x = oracle::random_matrix(3, p, rng);
    const CompressorConfig all{p / 2 + 1};
    const CompressedWindow cw = compress(x, all);
    REQUIRE(cw.band_start == 0);
    REQUIRE(cw.data.cols() == p);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE_THAT(cw.data.flat()[i], WithinAbs(x.flat()[i], 1e-8));
    const Matrix full = reconstruct_full(x, all);
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE_THAT(full.flat()[i], WithinAbs(x.flat()[i], 1e-8));
  }
}

TEST_CASE("compress equals slicing the direct spectrum", "[spectral][oracle]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t p = 16 + rng() % 80;
    const Matrix x = oracle::random_matrix(2, p, rng);
    const std::size_t q = 3 + rng() % (p / 2 - 2);
    const CompressedWindow cw = compress(x, {q});
    for (std::size_t n = 0; n < 2; ++n) {
      const auto spec = oracle::dft_row(x.row(n));
      std::vector<oracle::cplx> band(spec.begin() + static_cast<long>(cw.band_start),
                                     spec.begin() + static_cast<long>(cw.band_start + q));
      const auto ref = oracle::idft_row(band, 2 * (q - 1));
      REQUIRE(oracle::max_rel_err(cw.data.row(n), ref) < 1e-9);
    }
  }
}

TEST_CASE("compression drops an out-of-band spike", "[spectral]") {
  const std::size_t p = 128;
  Matrix x(1, p);
  for (std::size_t t = 0; t < p; ++t) {
    x(0, t) = 3.0 * std::sin(2.0 * std::numbers::pi * 6.0 * static_cast<double>(t) / p) +
              0.4 * std::cos(2.0 * std::numbers::pi * 55.0 * static_cast<double>(t) / p);
  }
  const CompressedWindow cw = compress(x, {17});
  REQUIRE(cw.band_start <= 6);
  REQUIRE(cw.band_start + 17 <= 55);
  const Spectrum out = forward_rdft(cw.data);
  std::size_t peak = 0;
  double total = 0.0;
  for (std::size_t k = 0; k < out.bins(); ++k) {
    total += std::norm(out(0, k));
    if (std::norm(out(0, k)) > std::norm(out(0, peak))) peak = k;
  }
  REQUIRE(peak == 6 - cw.band_start);
  REQUIRE(std::norm(out(0, peak)) > 0.999 * total);
}

TEST_CASE("reconstruction removes out-of-band noise", "[spectral]") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  const std::size_t p = 240;
  Matrix clean(1, p), noisy(1, p);
  for (std::size_t t = 0; t < p; ++t) {
    const double tt = static_cast<double>(t);
    clean(0, t) = 2.0 + std::sin(2.0 * std::numbers::pi * 3.0 * tt / p) +
                  0.5 * std::sin(2.0 * std::numbers::pi * 7.0 * tt / p + 1.0);
    noisy(0, t) = clean(0, t) + 0.2 * std::sin(2.0 * std::numbers::pi * 90.0 * tt / p) +
                  0.1 * std::cos(2.0 * std::numbers::pi * 101.0 * tt / p);
  }
  const Matrix rec = reconstruct_full(noisy, {21});
  REQUIRE(mape(clean, rec) < mape(clean, noisy));
  REQUIRE(mape(clean, reconstruct_full(clean, {21})) < 0.05);
}
