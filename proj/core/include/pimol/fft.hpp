#pragma once

#include <complex>
#include <memory>
#include <span>

namespace pimol {

/// Real-to-complex transform of fixed length n (FFTW backed). Each object
/// owns its plan and buffers; use one object per thread.
class RealFFT {
 public:
  explicit RealFFT(int n);
  ~RealFFT();
  RealFFT(const RealFFT&) = delete;
  RealFFT& operator=(const RealFFT&) = delete;
  RealFFT(RealFFT&&) noexcept;
  RealFFT& operator=(RealFFT&&) noexcept;

  int size() const;
  /// X_k = sum_j x_j exp(-2 pi i j k / n), k = 0..n/2.
  std::span<const std::complex<double>> forward(std::span<const double> x);
  /// x_j = sum_k X_k exp(+2 pi i j k / n) over the full Hermitian spectrum
  /// (unnormalized), from the n/2+1 stored coefficients.
  void backward(std::span<const std::complex<double>> half, std::span<double> x);

  /// out[k] = (1/n) sum_j a_(j+k) b_j with cyclic indices.
  void cyclic_correlation(std::span<const double> a, std::span<const double> b, std::span<double> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pimol
