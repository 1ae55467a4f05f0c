#include "pimol/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pimol/units.hpp"

namespace pimol {

double sho_matsubara_model(double omega_n, double omega, double mass, double beta, bool with_prefactor) {
  const double g = -1.0 / mass / (omega_n * omega_n + omega * omega);
  return with_prefactor ? g / beta : g;
}

ValueError frequency_from_zero_mode(const MatsubaraSpectrum& s, double mass) {
  if (!s.with_prefactor) throw AnalysisError("zero-mode frequency needs the 1/beta transform convention");
  if (s.values.empty()) throw AnalysisError("empty spectrum");
  const double g0 = s.values[0].real();
  if (!(g0 < 0.0))
    throw AnalysisError("G(i w_0) is not negative; the mean was probably not subtracted or the data are noise");
  ValueError out;
  out.value = std::sqrt(-1.0 / (s.beta * mass * g0));
  if (!s.errors.empty()) out.error = 0.5 * out.value * s.errors[0] / std::abs(g0);
  return out;
}

ValueError linewidth_frequency(const MatsubaraSpectrum& s) {
  if (s.values.size() < 2) throw AnalysisError("linewidth needs at least two Matsubara points");
  const double g0 = std::abs(s.values[0]);
  if (!(g0 > 0.0)) throw AnalysisError("linewidth: G(i w_0) vanishes");
  const double half = 0.5 * g0;
  for (std::size_t n = 1; n < s.values.size(); ++n) {
    const double gn = std::abs(s.values[n]);
    if (gn > half) continue;
    const double gp = std::abs(s.values[n - 1]);
    const double x0 = s.omega[n - 1] * s.omega[n - 1];
    const double x1 = s.omega[n] * s.omega[n];
    const double y0 = 1.0 / gp;
    const double y1 = 1.0 / gn;
    const double target = 1.0 / half;
    const double x = y1 == y0 ? x1 : x0 + (target - y0) * (x1 - x0) / (y1 - y0);
    ValueError out;
    out.value = std::sqrt(std::max(x, 0.0));
    const double plain = s.omega[n - 1] + (gp - half) * (s.omega[n] - s.omega[n - 1]) / (gp - gn);
    out.error = std::abs(plain - out.value);
    return out;
  }
  throw AnalysisError("linewidth: half maximum lies beyond the sampled Matsubara range");
}

ValueError fit_sho_frequency(const MatsubaraSpectrum& s, double mass, int n_fit) {
  const double guess = frequency_from_zero_mode(s, mass).value;
  if (n_fit < 0) {
    n_fit = 1;
    while (n_fit + 1 < static_cast<int>(s.omega.size()) && s.omega[n_fit + 1] <= 3.0 * guess) ++n_fit;
  }
  n_fit = std::min(n_fit, static_cast<int>(s.values.size()) - 1);
  if (n_fit < 1) throw AnalysisError("fit needs at least two Matsubara points");
  const bool weighted = s.errors.size() == s.values.size() &&
                        std::all_of(s.errors.begin(), s.errors.begin() + n_fit + 1, [](double e) { return e > 0.0; });
  auto weight = [&](int n) { return weighted ? 1.0 / (s.errors[n] * s.errors[n]) : 1.0; };
  auto model = [&](int n, double w) { return sho_matsubara_model(s.omega[n], w, mass, s.beta, true); };
  auto chi2 = [&](double w) {
    double c = 0.0;
    for (int n = 0; n <= n_fit; ++n) {
      const double r = s.values[n].real() - model(n, w);
      c += weight(n) * r * r;
    }
    return c;
  };

  // Golden section on ln w, then Gauss-Newton polish.
  double a = std::log(guess / 10.0), b = std::log(guess * 10.0);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = chi2(std::exp(c)), fd = chi2(std::exp(d));
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = chi2(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = chi2(std::exp(d));
    }
  }
  double w = std::exp(0.5 * (a + b));
  double jtj = 0.0;
  for (int it = 0; it < 20; ++it) {
    double jtr = 0.0;
    jtj = 0.0;
    for (int n = 0; n <= n_fit; ++n) {
      const double den = s.omega[n] * s.omega[n] + w * w;
      const double dm = 2.0 * w / (mass * s.beta * den * den);  // d model / d w
      const double r = s.values[n].real() - model(n, w);
      jtr += weight(n) * dm * r;
      jtj += weight(n) * dm * dm;
    }
    if (!(jtj > 0.0)) break;
    const double step = jtr / jtj;
    w += step;
    if (std::abs(step) <= 1e-15 * w) break;
  }
  if (!(w > 0.0) || !std::isfinite(w)) throw AnalysisError("SHO fit did not converge");
  ValueError out;
  out.value = w;
  if (weighted && jtj > 0.0) out.error = 1.0 / std::sqrt(jtj);
  return out;
}

FrequencyResult frequencies_from_spectrum(const MatsubaraSpectrum& s, double mass, int n_fit) {
  FrequencyResult r;
  r.zero_mode = frequency_from_zero_mode(s, mass);
  r.fit = fit_sho_frequency(s, mass, n_fit);
  r.linewidth = linewidth_frequency(s);
  if (n_fit < 0) {
    n_fit = 1;
    while (n_fit + 1 < static_cast<int>(s.omega.size()) && s.omega[n_fit + 1] <= 3.0 * r.zero_mode.value) ++n_fit;
  }
  r.n_fit = n_fit;
  return r;
}

namespace {

MatsubaraSpectrum frequency_spectrum(const CorrelationAccumulator& acc, int skip, int n_max) {
  auto c = acc.connected(skip);
  for (auto& v : c) v = -v;
  return to_matsubara(c, acc.beta(), n_max, true);
}

}  // namespace

FrequencyResult analyze_frequency(const CorrelationAccumulator& acc, double mass, int n_max, int n_fit) {
  if (acc.n_blocks() < 2) throw AnalysisError("correlator " + acc.name() + " needs at least 2 blocks");
  n_max = std::min(n_max, (acc.n_bins() - 1) / 2);
  const int nb = acc.n_blocks();

  // Fit weights come from the jackknife scatter of each Matsubara point.
  MatsubaraSpectrum full = frequency_spectrum(acc, -1, n_max);
  std::vector<MatsubaraSpectrum> loo;
  for (int k = 0; k < nb; ++k) loo.push_back(frequency_spectrum(acc, k, n_max));
  full.errors.assign(n_max + 1, 0.0);
  for (int n = 0; n <= n_max; ++n) {
    double bar = 0.0;
    for (const auto& s : loo) bar += s.values[n].real();
    bar /= nb;
    double ss = 0.0;
    for (const auto& s : loo) ss += (s.values[n].real() - bar) * (s.values[n].real() - bar);
    full.errors[n] = std::sqrt((nb - 1.0) / nb * ss);
  }
  const FrequencyResult central = frequencies_from_spectrum(full, mass, n_fit);
  auto with_errors = [&](const MatsubaraSpectrum& s) {
    MatsubaraSpectrum t = s;
    t.errors = full.errors;
    return t;
  };

  FrequencyResult out = central;
  out.fit = jackknife(nb, [&](int k) {
    return k < 0 ? central.fit.value : fit_sho_frequency(with_errors(loo[k]), mass, central.n_fit).value;
  });
  out.zero_mode = jackknife(nb, [&](int k) {
    return k < 0 ? central.zero_mode.value : frequency_from_zero_mode(loo[k], mass).value;
  });
  const ValueError lw = jackknife(nb, [&](int k) {
    return k < 0 ? central.linewidth.value : linewidth_frequency(loo[k]).value;
  });
  out.linewidth.value = lw.value;
  out.linewidth.error = std::hypot(lw.error, central.linewidth.error);
  return out;
}

BondLengthResult bond_length_from_correlator(std::span<const double> values, std::span<const double> errors) {
  const std::size_t n = values.size();
  if (n == 0) throw AnalysisError("empty separation correlator");
  BondLengthResult r;
  auto err = [&](std::size_t i) { return errors.size() == n ? errors[i] : 0.0; };
  if (n % 2 == 0) {
    r.at_half_beta = {values[n / 2], err(n / 2)};
  } else {
    const std::size_t lo = n / 2, hi = n / 2 + 1;
    r.at_half_beta = {0.5 * (values[lo] + values[hi]), 0.5 * std::hypot(err(lo), err(hi))};
  }
  r.at_zero = {values[0], err(0)};
  return r;
}

BondLengthResult bond_length_from_correlator(const CorrelationAccumulator& acc) {
  if (acc.n_blocks() < 1) throw AnalysisError("correlator " + acc.name() + " has no blocks");
  return bond_length_from_correlator(acc.mean(), acc.errors());
}

namespace {

double alpha_of(const CorrelationAccumulator& acc, int skip) {
  const auto c = acc.connected(skip);
  return to_matsubara(c, acc.beta(), 0, false).values[0].real();
}

}  // namespace

ValueError polarizability_component(const CorrelationAccumulator& acc) {
  if (acc.n_blocks() < 2) throw AnalysisError("correlator " + acc.name() + " needs at least 2 blocks");
  return jackknife(acc.n_blocks(), [&](int k) { return alpha_of(acc, k); });
}

PolarizabilityResult static_polarizability_from_correlator(const CorrelationAccumulator* x,
                                                           const CorrelationAccumulator* y,
                                                           const CorrelationAccumulator* z, GeometryMode mode,
                                                           bool geometry_fixed) {
  if (!x || !y || !z) throw AnalysisError("polarizability needs the dipole_x, dipole_y and dipole_z correlators");
  if (mode == GeometryMode::fixed_axis && !geometry_fixed)
    throw AnalysisError("anisotropic polarizability requested for a run without a fixed molecular axis");
  const int nb = x->n_blocks();
  if (nb < 2 || y->n_blocks() != nb || z->n_blocks() != nb)
    throw AnalysisError("dipole correlators need the same number (>= 2) of blocks");
  const auto alpha = alpha_of;
  PolarizabilityResult r;
  r.mode = mode;
  r.mean = jackknife(nb, [&](int k) { return (alpha(*x, k) + alpha(*y, k) + alpha(*z, k)) / 3.0; });
  if (mode == GeometryMode::fixed_axis) {
    r.perp = jackknife(nb, [&](int k) { return 0.5 * (alpha(*x, k) + alpha(*y, k)); });
    r.para = jackknife(nb, [&](int k) { return alpha(*z, k); });
  }
  return r;
}

std::vector<double> rotational_populations(double beta, double b_wavenumber, int j_max) {
  if (j_max < 0) throw std::invalid_argument("rotational_populations: j_max must be non-negative");
  const double b = units::wavenumber_to_hartree(b_wavenumber);
  std::vector<double> w(j_max + 1);
  for (int j = 0; j <= j_max; ++j) w[j] = (2.0 * j + 1.0) * std::exp(-beta * b * j * (j + 1.0));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

SystemSpec with_fixed_separation(const SystemSpec& base, double separation) {
  SystemSpec s = base;
  SpeciesSpec* pinned = nullptr;
  for (auto& sp : s.species) {
    if (!sp.fixed_positions) continue;
    if (pinned) throw AnalysisError("scan template has more than one fixed species");
    pinned = &sp;
  }
  if (!pinned || pinned->count != 2) throw AnalysisError("scan template needs exactly one fixed species with count 2");
  pinned->fixed_positions = std::vector<Vec3>{{0.0, 0.0, -0.5 * separation}, {0.0, 0.0, 0.5 * separation}};
  return s;
}

std::vector<ScanPoint> scan_bo_surface(const SystemSpec& base, std::vector<double> separations,
                                       const std::function<ValueError(const SystemSpec&)>& run_energy,
                                       const std::function<void(const std::string&)>& warn) {
  std::ranges::sort(separations);
  std::vector<double> unique;
  for (double d : separations) {
    if (!(d > 0.0)) throw AnalysisError("separations must be positive");
    if (!unique.empty() && std::abs(unique.back() - d) <= 1e-12 * d) {
      if (warn) warn("duplicate separation " + std::to_string(d) + " bohr ignored");
      continue;
    }
    unique.push_back(d);
  }
  std::vector<ScanPoint> out;
  for (double d : unique) out.push_back({d, run_energy(with_fixed_separation(base, d))});
  return out;
}

}  // namespace pimol
