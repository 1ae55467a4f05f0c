#include "pimol/special_functions.hpp"

#include <cmath>
#include <stdexcept>

#include "pimol/units.hpp"

namespace pimol {

void scaled_bessel_i_sequence(double x, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  if (n == 0) return;
  if (x < 0.0) throw std::invalid_argument("scaled_bessel_i_sequence: negative argument");
  if (x == 0.0) {
    for (auto& v : out) v = 0.0;
    return;
  }
  const double e2 = std::exp(-2.0 * x);
  const double f0 = -std::expm1(-2.0 * x);
  const int lmax = n - 1;

  const double lm = static_cast<double>(lmax);
  if (x > 10.0 && x > 2.0 * lm && x > 0.25 * lm * lm) {
    // Forward recurrence; error growth stays below ~e^4 in this regime.
    out[0] = f0;
    if (n == 1) return;
    out[1] = ((x - 1.0) + (x + 1.0) * e2) / x;
    for (int l = 1; l < lmax; ++l) out[l + 1] = out[l - 1] - (2.0 * l + 1.0) / x * out[l];
    return;
  }

  // Miller: start far enough above lmax that the minimal solution has decayed.
  const int start = static_cast<int>(std::ceil(std::sqrt(lm * lm + 80.0 * x))) + 12;
  double above = 0.0;
  double current = 1e-300;
  for (int l = start; l > lmax; --l) {
    const double below = above + (2.0 * l + 1.0) / x * current;
    above = current;
    current = below;
    if (current > 1e250) {
      above *= 1e-250;
      current *= 1e-250;
    }
  }
  // current holds f_lmax (unnormalized), above holds f_{lmax+1}.
  out[lmax] = current;
  for (int l = lmax; l > 0; --l) {
    const double below = above + (2.0 * l + 1.0) / x * current;
    above = current;
    current = below;
    out[l - 1] = current;
    if (current > 1e250) {
      for (int k = l - 1; k <= lmax; ++k) out[k] *= 1e-250;
      above *= 1e-250;
      current *= 1e-250;
    }
  }
  const double scale = f0 / out[0];
  for (auto& v : out) {
    v *= scale;
    if (v < 1e-300) v = 0.0;
  }
}

double scaled_bessel_i(int l, double x) {
  std::vector<double> values(static_cast<std::size_t>(l) + 1);
  scaled_bessel_i_sequence(x, values);
  return values[l];
}

void legendre_sequence(double c, std::span<double> out) {
  const int n = static_cast<int>(out.size());
  if (n == 0) return;
  out[0] = 1.0;
  if (n == 1) return;
  out[1] = c;
  for (int l = 1; l + 1 < n; ++l) out[l + 1] = ((2.0 * l + 1.0) * c * out[l] - l * out[l - 1]) / (l + 1.0);
}

GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(units::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace pimol
