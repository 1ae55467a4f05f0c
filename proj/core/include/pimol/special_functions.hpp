#pragma once

#include <span>
#include <vector>

namespace pimol {

/// Fills out[l] = 2x e^{-x} i_l(x), l = 0..out.size()-1, where i_l is the
/// modified spherical Bessel function of the first kind. Relative accuracy is
/// kept for every l (forward recurrence only where it is stable, Miller's
/// backward recurrence elsewhere). Values below ~1e-300 flush to zero.
void scaled_bessel_i_sequence(double x, std::span<double> out);

/// Single-order convenience wrapper.
double scaled_bessel_i(int l, double x);

/// Fills out[l] = P_l(c) for l = 0..out.size()-1.
void legendre_sequence(double c, std::span<double> out);

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, computed by Newton iteration on P_n.
GaussLegendre gauss_legendre(int n);

}  // namespace pimol
