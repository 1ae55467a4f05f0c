#pragma once

#include <functional>
#include <span>
#include <vector>

namespace pimol {

struct ValueError {
  double value = 0.0;
  double error = 0.0;
};

/// Blocking analysis of a series of block means.
struct BlockSummary {
  double mean = 0.0;
  double error = 0.0;  // standard error of the mean
  double lag1 = 0.0;   // lag-1 autocorrelation of the block means
  int blocks = 0;
  /// Blocks are treated as independent only when |lag1| < 0.1.
  bool correlated() const { return lag1 >= 0.1; }
};

/// Needs at least 2 blocks; throws std::invalid_argument otherwise.
BlockSummary summarize_blocks(std::span<const double> block_means);

/// Delete-one jackknife. estimate(k) must return the statistic with block k
/// left out (k = -1: all blocks). Error is sqrt((n-1)/n sum (x_k - x_bar)^2).
ValueError jackknife(int n_blocks, const std::function<double(int)>& estimate);

/// Means of a block series with each block left out in turn.
std::vector<double> leave_one_out_means(std::span<const double> blocks);

/// Two-sided one-sample Kolmogorov-Smirnov statistic against a CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic p-value of the KS statistic for n samples.
double ks_pvalue(double statistic, std::size_t n);

}  // namespace pimol
