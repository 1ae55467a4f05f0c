#include "pimol/greens.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pimol/action.hpp"
#include "pimol/special_functions.hpp"
#include "pimol/units.hpp"

namespace pimol {

Observable parse_observable(const std::string& name) {
  if (name == "separation") return Observable::separation;
  if (name == "dipole_x") return Observable::dipole_x;
  if (name == "dipole_y") return Observable::dipole_y;
  if (name == "dipole_z") return Observable::dipole_z;
  throw std::invalid_argument("unknown observable '" + name + "'");
}

std::string observable_name(Observable o) {
  switch (o) {
    case Observable::separation: return "separation";
    case Observable::dipole_x: return "dipole_x";
    case Observable::dipole_y: return "dipole_y";
    case Observable::dipole_z: return "dipole_z";
  }
  return "?";
}

void observable_series(const ActionContext& ctx, const PathConfiguration& config, Observable o,
                       std::span<double> out) {
  const int n = config.n_slices();
  if (static_cast<int>(out.size()) != n) throw std::invalid_argument("observable_series: wrong output length");
  if (o == Observable::separation) {
    const auto pair = ctx.spec().separation_pair();
    if (!pair) throw std::invalid_argument("separation observable needs a separation pair");
    const auto pa = config.path((*pair)[0]);
    const auto pb = config.path((*pair)[1]);
    for (int j = 0; j < n; ++j) out[j] = norm(pa[j] - pb[j]);
    return;
  }
  const int axis = o == Observable::dipole_x ? 0 : (o == Observable::dipole_y ? 1 : 2);
  std::fill(out.begin(), out.end(), 0.0);
  for (int p = 0; p < config.n_particles(); ++p) {
    const double q = ctx.charge(p);
    if (q == 0.0) continue;
    const auto path = config.path(p);
    for (int j = 0; j < n; ++j) out[j] += q * path[j][axis];
  }
}

int correlator_bin_count(int n_slices, int max_bins) {
  if (n_slices <= max_bins) return n_slices;
  for (int m = max_bins; m >= 1; --m)
    if (n_slices % m == 0) return m;
  return 1;
}

CorrelationAccumulator::CorrelationAccumulator(std::string name, int n_slices, int max_bins, double beta)
    : name_(std::move(name)),
      n_slices_(n_slices),
      n_bins_(correlator_bin_count(n_slices, max_bins)),
      beta_(beta),
      fft_(std::make_unique<RealFFT>(n_slices)),
      work_(n_slices),
      open_sum_(n_bins_, 0.0) {}

void CorrelationAccumulator::add_sample(std::span<const double> series) {
  if (static_cast<int>(series.size()) != n_slices_) throw std::invalid_argument("add_sample: wrong series length");
  fft_->cyclic_correlation(series, series, work_);
  const int st = stride();
  for (int b = 0; b < n_bins_; ++b) open_sum_[b] += work_[static_cast<std::size_t>(b) * st];
  open_obs_ += std::accumulate(series.begin(), series.end(), 0.0) / n_slices_;
  ++open_count_;
}

bool CorrelationAccumulator::close_block() {
  if (open_count_ == 0) return false;
  std::vector<double> m(n_bins_);
  for (int b = 0; b < n_bins_; ++b) m[b] = open_sum_[b] / static_cast<double>(open_count_);
  blocks_.push_back(std::move(m));
  observable_blocks_.push_back(open_obs_ / static_cast<double>(open_count_));
  std::fill(open_sum_.begin(), open_sum_.end(), 0.0);
  open_obs_ = 0.0;
  open_count_ = 0;
  return true;
}

void CorrelationAccumulator::add_block(std::vector<double> values, double observable_mean) {
  if (static_cast<int>(values.size()) != n_bins_) throw std::invalid_argument("add_block: wrong bin count");
  blocks_.push_back(std::move(values));
  observable_blocks_.push_back(observable_mean);
}

void CorrelationAccumulator::drop_blocks(int count) {
  count = std::clamp(count, 0, n_blocks());
  blocks_.erase(blocks_.begin(), blocks_.begin() + count);
  observable_blocks_.erase(observable_blocks_.begin(), observable_blocks_.begin() + count);
}

void CorrelationAccumulator::merge(const CorrelationAccumulator& other) {
  if (other.n_bins_ != n_bins_ || other.n_slices_ != n_slices_)
    throw std::invalid_argument("merge: correlators of different shape");
  blocks_.insert(blocks_.end(), other.blocks_.begin(), other.blocks_.end());
  observable_blocks_.insert(observable_blocks_.end(), other.observable_blocks_.begin(),
                            other.observable_blocks_.end());
}

std::vector<double> CorrelationAccumulator::mean(int skip) const {
  std::vector<double> m(n_bins_, 0.0);
  int used = 0;
  for (int k = 0; k < n_blocks(); ++k) {
    if (k == skip) continue;
    for (int b = 0; b < n_bins_; ++b) m[b] += blocks_[k][b];
    ++used;
  }
  if (used == 0) throw std::logic_error("correlator " + name_ + " has no blocks");
  for (auto& v : m) v /= used;
  return m;
}

double CorrelationAccumulator::observable_mean(int skip) const {
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < n_blocks(); ++k) {
    if (k == skip) continue;
    sum += observable_blocks_[k];
    ++used;
  }
  if (used == 0) throw std::logic_error("correlator " + name_ + " has no blocks");
  return sum / used;
}

std::vector<double> CorrelationAccumulator::connected(int skip) const {
  auto m = mean(skip);
  const double a = observable_mean(skip);
  for (auto& v : m) v -= a * a;
  return m;
}

std::vector<double> CorrelationAccumulator::errors() const {
  std::vector<double> e(n_bins_, 0.0);
  const int n = n_blocks();
  if (n < 2) return e;
  const auto m = mean();
  for (const auto& blk : blocks_)
    for (int b = 0; b < n_bins_; ++b) e[b] += (blk[b] - m[b]) * (blk[b] - m[b]);
  for (auto& v : e) v = std::sqrt(v / (n - 1.0) / n);
  return e;
}

namespace {

void check_transform_args(std::span<const double> values, int n_max) {
  const int m = static_cast<int>(values.size());
  if (m < 2) throw std::invalid_argument("to_matsubara: need at least 2 bins");
  if (n_max < 0 || 2 * n_max >= m)
    throw std::invalid_argument("to_matsubara: n_max = " + std::to_string(n_max) +
                                " is at or above the Nyquist limit of " + std::to_string(m) + " bins");
}

}  // namespace

MatsubaraSpectrum to_matsubara_trapezoid(std::span<const double> values, double beta, int n_max,
                                         bool with_prefactor) {
  check_transform_args(values, n_max);
  const int m = static_cast<int>(values.size());
  RealFFT fft(m);
  const auto f = fft.forward(values);
  const double delta = beta / m;
  MatsubaraSpectrum out;
  out.beta = beta;
  out.with_prefactor = with_prefactor;
  const double scale = delta * (with_prefactor ? 1.0 / beta : 1.0);
  for (int n = 0; n <= n_max; ++n) {
    out.omega.push_back(2.0 * units::pi * n / beta);
    out.values.push_back(std::conj(f[n]) * scale);
  }
  return out;
}

MatsubaraSpectrum to_matsubara(std::span<const double> values, double beta, int n_max, bool with_prefactor) {
  check_transform_args(values, n_max);
  const int m = static_cast<int>(values.size());
  constexpr int kOrder = 8;  // stencil points
  if (m < kOrder) return to_matsubara_trapezoid(values, beta, n_max, with_prefactor);

  const GaussLegendre rule = gauss_legendre(kOrder);
  const double delta = beta / m;
  auto node = [&](int j) { return j == m ? values[0] : values[j]; };

  // Lagrange weights on the stencil offsets 0..7 at a given abscissa.
  auto lagrange = [](double x, double* w) {
    for (int a = 0; a < kOrder; ++a) {
      double v = 1.0;
      for (int b = 0; b < kOrder; ++b)
        if (b != a) v *= (x - b) / static_cast<double>(a - b);
      w[a] = v;
    }
  };

  RealFFT fft(m);
  std::vector<double> samples(m);
  std::vector<std::complex<double>> acc(n_max + 1, 0.0);
  double w[kOrder];
  for (int g = 0; g < kOrder; ++g) {
    const double frac = 0.5 * (rule.nodes[g] + 1.0);  // position inside the interval
    for (int j = 0; j < m; ++j) {
      const int start = std::clamp(j - kOrder / 2 + 1, 0, m - kOrder + 1);
      lagrange(j - start + frac, w);
      double v = 0.0;
      for (int a = 0; a < kOrder; ++a) v += w[a] * node(start + a);
      samples[j] = v;
    }
    const auto f = fft.forward(samples);
    for (int n = 0; n <= n_max; ++n) {
      const double phase = 2.0 * units::pi * n * frac / m;
      acc[n] += 0.5 * rule.weights[g] * std::conj(f[n]) * std::polar(1.0, phase);
    }
  }

  MatsubaraSpectrum out;
  out.beta = beta;
  out.with_prefactor = with_prefactor;
  const double scale = delta * (with_prefactor ? 1.0 / beta : 1.0);
  for (int n = 0; n <= n_max; ++n) {
    out.omega.push_back(2.0 * units::pi * n / beta);
    out.values.push_back(acc[n] * scale);
  }
  return out;
}

}  // namespace pimol
