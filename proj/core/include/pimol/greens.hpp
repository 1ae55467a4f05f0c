#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "pimol/fft.hpp"

namespace pimol {

class ActionContext;
class PathConfiguration;

enum class Observable { separation, dipole_x, dipole_y, dipole_z };

Observable parse_observable(const std::string& name);
std::string observable_name(Observable o);

/// Per-slice values of an observable: |r_a - r_b| for the separation pair,
/// or a component of the total dipole sum_i q_i r_i.
void observable_series(const ActionContext& ctx, const PathConfiguration& config, Observable o,
                       std::span<double> out);

/// Largest divisor of n_slices not above max_bins.
int correlator_bin_count(int n_slices, int max_bins);

/// Block-averaged autocorrelation <A(tau_k) A(0)> on the slice grid,
/// averaged over all N time origins, stored as the raw (unconnected)
/// positive product. With N > max_bins only every stride-th lag is kept.
class CorrelationAccumulator {
 public:
  CorrelationAccumulator(std::string name, int n_slices, int max_bins, double beta);

  const std::string& name() const { return name_; }
  int n_slices() const { return n_slices_; }
  int n_bins() const { return n_bins_; }
  int stride() const { return n_slices_ / n_bins_; }
  double beta() const { return beta_; }
  double bin_width() const { return beta_ / n_bins_; }

  /// Adds one configuration's series (length n_slices).
  void add_sample(std::span<const double> series);
  /// Ends the current block; returns false if it held no samples.
  bool close_block();
  std::size_t samples_in_open_block() const { return open_count_; }

  int n_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<double>>& blocks() const { return blocks_; }
  /// Block means of A itself, for connected correlators.
  const std::vector<double>& observable_blocks() const { return observable_blocks_; }
  void add_block(std::vector<double> values, double observable_mean);
  void drop_blocks(int count);  // discards the first `count` blocks
  /// Appends all blocks of another accumulator of the same shape.
  void merge(const CorrelationAccumulator& other);

  /// Mean over blocks, optionally leaving block `skip` out.
  std::vector<double> mean(int skip = -1) const;
  double observable_mean(int skip = -1) const;
  /// mean(skip) - observable_mean(skip)^2
  std::vector<double> connected(int skip = -1) const;
  /// Standard error of each bin from the block scatter.
  std::vector<double> errors() const;

 private:
  std::string name_;
  int n_slices_;
  int n_bins_;
  double beta_;
  std::unique_ptr<RealFFT> fft_;
  std::vector<double> work_;
  std::vector<double> open_sum_;
  double open_obs_ = 0.0;
  std::size_t open_count_ = 0;
  std::vector<std::vector<double>> blocks_;
  std::vector<double> observable_blocks_;
};

/// G(i w_n) for n = 0..n_max, w_n = 2 pi n / beta.
struct MatsubaraSpectrum {
  double beta = 0.0;
  bool with_prefactor = true;  // 1/beta in front of the integral
  std::vector<double> omega;
  std::vector<std::complex<double>> values;
  std::vector<double> errors;  // empty unless filled by the caller
};

/// Transform of a periodic correlator given on bins tau_j = j beta / M,
/// j = 0..M-1 (bin M equals bin 0). The integrand is smooth on [0, beta]
/// but its periodic extension has a kink at 0, so each bin interval is
/// integrated exactly against a local degree-7 interpolant built from
/// points inside [0, beta]. Requires n_max < M/2.
MatsubaraSpectrum to_matsubara(std::span<const double> values, double beta, int n_max, bool with_prefactor);

/// Plain periodic trapezoid rule, kept for comparison (second order).
MatsubaraSpectrum to_matsubara_trapezoid(std::span<const double> values, double beta, int n_max,
                                         bool with_prefactor);

}  // namespace pimol
