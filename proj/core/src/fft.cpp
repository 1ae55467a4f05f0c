#include "pimol/fft.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace pimol {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFFT::Impl {
  int n = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  std::vector<std::complex<double>> keep;

  explicit Impl(int size) : n(size) {
    if (n < 1) throw std::invalid_argument("RealFFT: length must be positive");
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(n / 2 + 1);
    fwd = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
    keep.resize(n / 2 + 1);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(real);
    fftw_free(spec);
  }
};

RealFFT::RealFFT(int n) : impl_(std::make_unique<Impl>(n)) {}
RealFFT::~RealFFT() = default;
RealFFT::RealFFT(RealFFT&&) noexcept = default;
RealFFT& RealFFT::operator=(RealFFT&&) noexcept = default;

int RealFFT::size() const { return impl_->n; }

std::span<const std::complex<double>> RealFFT::forward(std::span<const double> x) {
  auto& m = *impl_;
  if (static_cast<int>(x.size()) != m.n) throw std::invalid_argument("RealFFT::forward: length mismatch");
  std::copy(x.begin(), x.end(), m.real);
  fftw_execute(m.fwd);
  for (int k = 0; k <= m.n / 2; ++k) m.keep[k] = {m.spec[k][0], m.spec[k][1]};
  return m.keep;
}

void RealFFT::backward(std::span<const std::complex<double>> half, std::span<double> x) {
  auto& m = *impl_;
  if (static_cast<int>(half.size()) != m.n / 2 + 1 || static_cast<int>(x.size()) != m.n)
    throw std::invalid_argument("RealFFT::backward: length mismatch");
  for (int k = 0; k <= m.n / 2; ++k) {
    m.spec[k][0] = half[k].real();
    m.spec[k][1] = half[k].imag();
  }
  fftw_execute(m.bwd);
  std::copy(m.real, m.real + m.n, x.begin());
}

void RealFFT::cyclic_correlation(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const int n = impl_->n;
  const auto first = forward(a);
  std::vector<std::complex<double>> fa(first.begin(), first.end());
  std::vector<std::complex<double>> prod(n / 2 + 1);
  if (a.data() == b.data()) {
    for (int k = 0; k <= n / 2; ++k) prod[k] = std::norm(fa[k]);
  } else {
    const auto fb = forward(b);
    for (int k = 0; k <= n / 2; ++k) prod[k] = fa[k] * std::conj(fb[k]);
  }
  backward(prod, out);
  const double scale = 1.0 / (static_cast<double>(n) * n);
  for (auto& v : out) v *= scale;
}

}  // namespace pimol
