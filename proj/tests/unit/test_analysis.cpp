#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pimol/analysis.hpp"
#include "pimol/rng.hpp"
#include "pimol/units.hpp"
#include "sho.hpp"
#include "test_support.hpp"

namespace {

using namespace pimol;

MatsubaraSpectrum closed_form_spectrum(const oracle::SHOReference& ref, int n_max) {
  MatsubaraSpectrum s;
  s.beta = ref.beta;
  s.with_prefactor = true;
  for (int n = 0; n <= n_max; ++n) {
    s.omega.push_back(2.0 * std::numbers::pi * n / ref.beta);
    s.values.emplace_back(oracle::sho_g_matsubara(ref, n, true), 0.0);
  }
  return s;
}

TEST(Frequency, ZeroModeIsExactForClosedForm) {
  for (double w : {1.0, 2.0}) {
    const oracle::SHOReference ref{1.0, w, 10.0};
    EXPECT_NEAR(frequency_from_zero_mode(closed_form_spectrum(ref, 10), 1.0).value, w, 1e-14);
  }
}

TEST(Frequency, ThreeMethodsAgreeOnSyntheticData) {
  for (double w : {0.7, 1.0, 2.0}) {
    const oracle::SHOReference ref{1.7, w, 10.0};
    const auto r = frequencies_from_spectrum(closed_form_spectrum(ref, 20), ref.m);
    EXPECT_NEAR(r.zero_mode.value, w, 1e-6 * w);
    EXPECT_NEAR(r.fit.value, w, 1e-6 * w);
    EXPECT_NEAR(r.linewidth.value, w, 1e-6 * w);
    EXPECT_GE(r.n_fit, 1);
  }
}

TEST(Frequency, FitWindowDefaultsToThreeOmega) {
  const oracle::SHOReference ref{1.0, 1.0, 10.0};
  const auto r = frequencies_from_spectrum(closed_form_spectrum(ref, 20), 1.0);
  EXPECT_EQ(r.n_fit, 4);  // w_4 = 2.51 <= 3, w_5 = 3.14 > 3
}

TEST(Frequency, WeightedFitReportsError) {
  const oracle::SHOReference ref{1.0, 1.0, 10.0};
  auto s = closed_form_spectrum(ref, 10);
  s.errors.assign(11, 1e-4);
  const auto f = fit_sho_frequency(s, 1.0);
  EXPECT_NEAR(f.value, 1.0, 1e-9);
  EXPECT_GT(f.error, 0.0);
}

TEST(Frequency, PositiveZeroModeIsAnError) {
  const oracle::SHOReference ref{1.0, 1.0, 10.0};
  auto s = closed_form_spectrum(ref, 5);
  s.values[0] = -s.values[0];
  EXPECT_THROW(frequency_from_zero_mode(s, 1.0), AnalysisError);
  auto t = closed_form_spectrum(ref, 5);
  t.with_prefactor = false;
  EXPECT_THROW(frequency_from_zero_mode(t, 1.0), AnalysisError) << "needs 1/beta";
}

TEST(Frequency, LinewidthOutsideSampledRange) {
  // At beta = 200 the half maximum falls between w_0 and w_1 = 0.0314 > w.
  // With only n = 0 there is nothing to bracket it.
  const oracle::SHOReference ref{918.0, 0.01866, 200.0};
  EXPECT_THROW(linewidth_frequency(closed_form_spectrum(ref, 0)), AnalysisError);
  EXPECT_NEAR(linewidth_frequency(closed_form_spectrum(ref, 5)).value, 0.01866, 1e-9);
}

TEST(Frequency, FromNoisyAccumulator) {
  // Raw correlator blocks of an SHO with <x> = 0.3 and small noise.
  const oracle::SHOReference ref{2.0, 1.5, 8.0};
  const int bins = 160;
  CorrelationAccumulator acc("separation", bins, bins, ref.beta);
  RandomStream r(6, 0);
  for (int b = 0; b < 30; ++b) {
    std::vector<double> v(bins);
    const double mean = 0.3 + 1e-4 * r.normal();
    for (int j = 0; j < bins; ++j) v[j] = -oracle::sho_g_tau(ref, j * ref.beta / bins) + mean * mean + 1e-5 * r.normal();
    acc.add_block(v, mean);
  }
  const auto f = analyze_frequency(acc, ref.m, 30);
  EXPECT_NEAR(f.zero_mode.value, 1.5, 5.0 * f.zero_mode.error + 1e-3);
  EXPECT_NEAR(f.fit.value, 1.5, 5.0 * f.fit.error + 1e-3);
  EXPECT_NEAR(f.linewidth.value, 1.5, 5.0 * f.linewidth.error + 1e-3);
  EXPECT_GT(f.fit.error, 0.0);
}

TEST(BondLength, CentralAndZeroBins) {
  const std::vector<double> v = {2.1, 2.09, 2.08, 2.075, 2.08, 2.09};
  const auto r = bond_length_from_correlator(v, {});
  EXPECT_DOUBLE_EQ(r.at_half_beta.value, 2.075);
  EXPECT_DOUBLE_EQ(r.at_zero.value, 2.1);
  const std::vector<double> odd = {2.1, 2.0, 1.9, 2.0, 2.1};
  EXPECT_DOUBLE_EQ(bond_length_from_correlator(odd, {}).at_half_beta.value, 1.95);
}

CorrelationAccumulator sho_dipole(const std::string& name, double w, std::uint64_t seed) {
  const oracle::SHOReference ref{1.0, w, 10.0};
  const int bins = 200;
  CorrelationAccumulator acc(name, bins, bins, ref.beta);
  RandomStream r(seed, 0);
  for (int b = 0; b < 20; ++b) {
    std::vector<double> v(bins);
    for (int j = 0; j < bins; ++j) v[j] = -oracle::sho_g_tau(ref, j * ref.beta / bins) + 1e-4 * r.normal();
    acc.add_block(v, 0.0);
  }
  return acc;
}

TEST(Polarizability, ShoAlphaFromDipoleCorrelators) {
  const auto x = sho_dipole("dipole_x", 0.5, 1), y = sho_dipole("dipole_y", 1.0, 2), z = sho_dipole("dipole_z", 2.0, 3);
  const auto r = static_polarizability_from_correlator(&x, &y, &z, GeometryMode::fixed_axis, true);
  EXPECT_NEAR(r.perp.value, 0.5 * (4.0 + 1.0), 1e-3);
  EXPECT_NEAR(r.para.value, 0.25, 1e-3);
  EXPECT_NEAR(r.mean.value, (4.0 + 1.0 + 0.25) / 3.0, 1e-3);
  EXPECT_GT(r.mean.error, 0.0);
}

TEST(Polarizability, ErrorsForMissingOrInconsistentInput) {
  const auto x = sho_dipole("dipole_x", 1.0, 1);
  EXPECT_THROW(static_polarizability_from_correlator(&x, nullptr, &x, GeometryMode::isotropic, false), AnalysisError);
  EXPECT_THROW(static_polarizability_from_correlator(&x, &x, &x, GeometryMode::fixed_axis, false), AnalysisError);
}

TEST(Rotation, PopulationsNormalizedWithBoltzmannRatios) {
  const double beta = 1000.0;
  const auto p = rotational_populations(beta, 60.853, 30);
  double sum = 0.0;
  for (double v : p) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-14);
  const double b = units::wavenumber_to_hartree(60.853);
  EXPECT_NEAR(p[1] / p[0], 3.0 * std::exp(-2.0 * beta * b), 1e-12);
  EXPECT_NEAR(p[2] / p[0], 5.0 * std::exp(-6.0 * beta * b), 1e-12);
  const auto hot = rotational_populations(200.0, 60.853, 30);
  EXPECT_GT(hot[0], 0.0);
  EXPECT_LT(hot[0], p[0]) << "populations spread out as beta falls";
}

TEST(Scan, DeduplicatesSortsAndPlacesProtons) {
  const auto base = support::h2_fixed_spec(1.4, 2.0, 0.05);
  std::vector<std::string> warnings;
  std::vector<double> seen;
  const auto pts = scan_bo_surface(
      base, {2.0, 1.0, 1.4, 1.0},
      [&](const SystemSpec& s) {
        const auto& pos = *s.species[1].fixed_positions;
        seen.push_back(pos[1][2] - pos[0][2]);
        return ValueError{-1.0 - seen.back(), 0.01};
      },
      [&](const std::string& w) { warnings.push_back(w); });
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_DOUBLE_EQ(pts[0].separation, 1.0);
  EXPECT_DOUBLE_EQ(pts[2].separation, 2.0);
  EXPECT_DOUBLE_EQ(seen[1], 1.4);
  EXPECT_DOUBLE_EQ(pts[1].energy.value, -2.4);
}

TEST(Scan, TemplateNeedsAPinnedPair) {
  EXPECT_THROW(with_fixed_separation(support::hydrogen_spec(2.0, 0.05), 1.4), AnalysisError);
}

}  // namespace
