#include "pimol/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pimol {

BlockSummary summarize_blocks(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("blocking analysis needs at least 2 blocks");
  const auto n = static_cast<double>(x.size());
  BlockSummary s;
  s.blocks = static_cast<int>(x.size());
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - s.mean) * (v - s.mean);
  var /= n - 1.0;
  s.error = std::sqrt(var / n);
  if (var > 0.0) {
    double c1 = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) c1 += (x[i] - s.mean) * (x[i - 1] - s.mean);
    s.lag1 = c1 / ((n - 1.0) * var);
  }
  return s;
}

ValueError jackknife(int n, const std::function<double(int)>& estimate) {
  ValueError out;
  out.value = estimate(-1);
  if (n < 2) return out;
  std::vector<double> loo(n);
  for (int k = 0; k < n; ++k) loo[k] = estimate(k);
  const double bar = std::accumulate(loo.begin(), loo.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : loo) ss += (v - bar) * (v - bar);
  out.error = std::sqrt((n - 1.0) / n * ss);
  return out;
}

std::vector<double> leave_one_out_means(std::span<const double> blocks) {
  const double total = std::accumulate(blocks.begin(), blocks.end(), 0.0);
  const auto n = static_cast<double>(blocks.size());
  std::vector<double> out(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) out[k] = (total - blocks[k]) / (n - 1.0);
  return out;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::ranges::sort(samples);
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (i + 1.0) / n - f, f - i / n});
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  // Stephens' small-sample correction of the Kolmogorov limit law.
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * statistic;
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace pimol
