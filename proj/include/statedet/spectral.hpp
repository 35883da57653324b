#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "statedet/matrix.hpp"

namespace statedet {

using Complex = std::complex<double>;

/// One-sided spectrum of an N x P real window: N rows of K = P/2 + 1 bins.
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(std::size_t dims, std::size_t bins, std::size_t source_length)
      : dims_(dims), bins_(bins), source_length_(source_length), data_(dims * bins) {}

  std::size_t dims() const noexcept { return dims_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t source_length() const noexcept { return source_length_; }

  Complex& operator()(std::size_t n, std::size_t k) { return data_[n * bins_ + k]; }
  const Complex& operator()(std::size_t n, std::size_t k) const { return data_[n * bins_ + k]; }
  std::span<Complex> row(std::size_t n) { return {data_.data() + n * bins_, bins_}; }
  std::span<const Complex> row(std::size_t n) const { return {data_.data() + n * bins_, bins_}; }

 private:
  std::size_t dims_ = 0;
  std::size_t bins_ = 0;
  std::size_t source_length_ = 0;
  std::vector<Complex> data_;
};

constexpr std::size_t one_sided_bins(std::size_t length) noexcept { return length / 2 + 1; }

struct CompressorConfig {
  std::size_t bandwidth = 33;  // Q, number of consecutive bins retained

  /// Throws ConfigError unless 2 <= Q <= bins.
  void validate_for(std::size_t bins) const;
  /// Length of a compressed window: 2 (Q - 1).
  std::size_t compressed_length() const noexcept { return 2 * (bandwidth - 1); }
  bool operator==(const CompressorConfig&) const = default;
};

struct CompressedWindow {
  Matrix data;  // N x 2(Q-1)
  std::size_t band_start = 0;
  std::size_t bandwidth = 0;
};

/// In-place complex DFT of any length: iterative radix-2 for powers of two,
/// Bluestein's chirp-z convolution otherwise. The inverse includes the 1/n factor.
void fft(std::span<Complex> data, bool inverse = false);

Spectrum forward_rdft(const Matrix& window);

/// Inverse of forward_rdft: the one-sided bins are extended by conjugate
/// symmetry before the 1/P inverse sum, so the result is always real.
Matrix inverse_rdft(const Spectrum& spectrum, std::size_t out_length);

/// Entry k: band energy sum_{i=k}^{k+Q-1} sum_n |q_{n,i}|^2, for 0 <= k <= K - Q.
Vector cumulative_energy(const Spectrum& spectrum, const CompressorConfig& cfg);

/// First index of the maximum.
std::size_t select_band(std::span<const double> energies);

/// Keeps the most energetic Q-bin band, re-indexed to baseband, and inverts it
/// at the shortened length 2(Q - 1).
CompressedWindow compress(const Matrix& window, const CompressorConfig& cfg);

/// Same band selection as compress, but the band stays at its original bins
/// and the inverse runs at the original length.
Matrix reconstruct_full(const Matrix& window, const CompressorConfig& cfg);

/// Mean over all entries of |ref - est| / (|ref| + eps).
double mape(const Matrix& reference, const Matrix& estimate, double eps = 1e-8);

}  // namespace statedet
