#include "statedet/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "statedet/error.hpp"

namespace statedet {
namespace {

void fft_radix2(std::span<Complex> a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles computed directly per index rather than by repeated
    // multiplication, which drifts for long transforms.
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(len);
      const Complex w(std::cos(angle), std::sin(angle));
      for (std::size_t i = 0; i < n; i += len) {
        Complex u = a[i + k];
        Complex v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

void fft_bluestein(std::span<Complex> a, bool inverse) {
  const std::size_t n = a.size();
  const std::size_t m = std::bit_ceil(2 * n - 1);
  const double sign = inverse ? 1.0 : -1.0;

  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small and exact.
    const std::size_t k2 = (k * k) % (2 * n);
    const double angle = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = Complex(std::cos(angle), std::sin(angle));
  }

  std::vector<Complex> x(m), y(m);
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    y[k] = std::conj(chirp[k]);
    y[m - k] = std::conj(chirp[k]);
  }
  fft_radix2(x, false);
  fft_radix2(y, false);
  for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
  fft_radix2(x, true);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

void check_bins(const Spectrum& spectrum, std::size_t out_length) {
  if (one_sided_bins(out_length) != spectrum.bins()) {
    throw SizingError("spectrum has " + std::to_string(spectrum.bins()) +
                      " bins, inconsistent with output length " + std::to_string(out_length));
  }
}

}  // namespace

void fft(std::span<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (n <= 1) return;
  if (std::has_single_bit(n)) {
    fft_radix2(data, inverse);
  } else {
    fft_bluestein(data, inverse);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& c : data) c *= scale;
  }
}

void CompressorConfig::validate_for(std::size_t bins) const {
  if (bandwidth < 2 || bandwidth > bins) {
    throw ConfigError("compressor.bandwidth must satisfy 2 <= Q <= " + std::to_string(bins) +
                      " (got " + std::to_string(bandwidth) + ")");
  }
}

Spectrum forward_rdft(const Matrix& window) {
  const std::size_t length = window.cols();
  if (length < 2) throw SizingError("forward_rdft needs at least 2 samples");
  const std::size_t bins = one_sided_bins(length);
  Spectrum out(window.rows(), bins, length);
  std::vector<Complex> buf(length);
  for (std::size_t n = 0; n < window.rows(); ++n) {
    auto src = window.row(n);
    for (std::size_t p = 0; p < length; ++p) buf[p] = Complex(src[p], 0.0);
    fft(buf, false);
    std::copy_n(buf.begin(), bins, out.row(n).begin());
  }
  return out;
}

Matrix inverse_rdft(const Spectrum& spectrum, std::size_t out_length) {
  check_bins(spectrum, out_length);
  const std::size_t bins = spectrum.bins();
  Matrix out(spectrum.dims(), out_length);
  std::vector<Complex> buf(out_length);
  for (std::size_t n = 0; n < spectrum.dims(); ++n) {
    auto q = spectrum.row(n);
    std::fill(buf.begin(), buf.end(), Complex{});
    buf[0] = q[0];
    for (std::size_t k = 1; k < bins; ++k) {
      buf[k] = q[k];
      if (out_length - k != k) buf[out_length - k] = std::conj(q[k]);
    }
    fft(buf, true);
    auto dst = out.row(n);
    for (std::size_t p = 0; p < out_length; ++p) dst[p] = buf[p].real();
  }
  return out;
}

Vector cumulative_energy(const Spectrum& spectrum, const CompressorConfig& cfg) {
  cfg.validate_for(spectrum.bins());
  const std::size_t bins = spectrum.bins();
  Vector power(bins, 0.0);
  for (std::size_t n = 0; n < spectrum.dims(); ++n) {
    auto q = spectrum.row(n);
    for (std::size_t k = 0; k < bins; ++k) power[k] += std::norm(q[k]);
  }
  // Each band sum is formed directly; a running difference would let
  // rounding differ between placements with equal energy.
  Vector energy(bins - cfg.bandwidth + 1, 0.0);
  for (std::size_t k = 0; k < energy.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = k; i < k + cfg.bandwidth; ++i) acc += power[i];
    energy[k] = acc;
  }
  return energy;
}

std::size_t select_band(std::span<const double> energies) {
  if (energies.empty()) throw SizingError("select_band needs a non-empty energy vector");
  return static_cast<std::size_t>(std::max_element(energies.begin(), energies.end()) -
                                  energies.begin());
}

CompressedWindow compress(const Matrix& window, const CompressorConfig& cfg) {
  Spectrum spectrum = forward_rdft(window);
  cfg.validate_for(spectrum.bins());
  const Vector energy = cumulative_energy(spectrum, cfg);
  const std::size_t start = select_band(energy);

  const std::size_t out_length = cfg.compressed_length();
  Spectrum band(spectrum.dims(), cfg.bandwidth, out_length);
  for (std::size_t n = 0; n < spectrum.dims(); ++n) {
    auto src = spectrum.row(n);
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(start), cfg.bandwidth,
                band.row(n).begin());
  }
  return {inverse_rdft(band, out_length), start, cfg.bandwidth};
}

Matrix reconstruct_full(const Matrix& window, const CompressorConfig& cfg) {
  Spectrum spectrum = forward_rdft(window);
  cfg.validate_for(spectrum.bins());
  const std::size_t start = select_band(cumulative_energy(spectrum, cfg));
  Spectrum kept(spectrum.dims(), spectrum.bins(), window.cols());
  for (std::size_t n = 0; n < spectrum.dims(); ++n) {
    for (std::size_t k = start; k < start + cfg.bandwidth; ++k) kept(n, k) = spectrum(n, k);
  }
  return inverse_rdft(kept, window.cols());
}

double mape(const Matrix& reference, const Matrix& estimate, double eps) {
  if (reference.rows() != estimate.rows() || reference.cols() != estimate.cols()) {
    throw DimensionError("mape: shape mismatch");
  }
  auto r = reference.flat();
  auto e = estimate.flat();
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) acc += std::abs(r[i] - e[i]) / (std::abs(r[i]) + eps);
  return acc / static_cast<double>(r.size());
}

}  // namespace statedet
