#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pimol/greens.hpp"
#include "pimol/rng.hpp"
#include "sho.hpp"
#include "test_support.hpp"

namespace {

using namespace pimol;

std::vector<double> sho_bins(const oracle::SHOReference& ref, int m) {
  std::vector<double> g(m);
  for (int j = 0; j < m; ++j) g[j] = oracle::sho_g_tau(ref, j * ref.beta / m);
  return g;
}

TEST(Matsubara, RoundTripOfClosedFormWithin1e6) {
  for (double w : {0.5, 1.0, 2.0}) {
    const oracle::SHOReference ref{1.0, w, 10.0};
    const auto sp = to_matsubara(sho_bins(ref, 200), ref.beta, 20, true);
    for (int n = 0; n <= 20; ++n) {
      const double want = oracle::sho_g_matsubara(ref, n, true);
      EXPECT_NEAR(sp.values[n].real(), want, 1e-6 * std::abs(want)) << "w=" << w << " n=" << n;
      EXPECT_NEAR(sp.values[n].imag(), 0.0, 1e-12);
      EXPECT_NEAR(sp.omega[n], 2.0 * std::numbers::pi * n / ref.beta, 1e-14);
    }
  }
}

TEST(Matsubara, TrapezoidIsOnlySecondOrder) {
  const oracle::SHOReference ref{1.0, 1.0, 10.0};
  const auto sp = to_matsubara_trapezoid(sho_bins(ref, 200), ref.beta, 5, true);
  const double want = oracle::sho_g_matsubara(ref, 0, true);
  EXPECT_GT(std::abs(sp.values[0].real() - want), 1e-6 * std::abs(want));
  EXPECT_LT(std::abs(sp.values[0].real() - want), 1e-2 * std::abs(want));
}

TEST(Matsubara, ConventionRatioIsBeta) {
  const oracle::SHOReference ref{1.0, 1.0, 10.0};
  const auto a = to_matsubara(sho_bins(ref, 200), ref.beta, 5, true);
  const auto b = to_matsubara(sho_bins(ref, 200), ref.beta, 5, false);
  for (int n = 0; n <= 5; ++n) EXPECT_NEAR(b.values[n].real() / a.values[n].real(), ref.beta, 1e-12);
}

TEST(Matsubara, RejectsFrequenciesAboveNyquist) {
  std::vector<double> g(20, 1.0);
  EXPECT_THROW(to_matsubara(g, 1.0, 10, true), std::invalid_argument);
  EXPECT_NO_THROW(to_matsubara(g, 1.0, 9, true));
}

TEST(Correlator, BinCountDividesSlices) {
  EXPECT_EQ(correlator_bin_count(20000, 4096), 4000);
  EXPECT_EQ(correlator_bin_count(400, 4096), 400);
  EXPECT_EQ(correlator_bin_count(97, 10), 1);
}

TEST(Correlator, AveragesOverAllOrigins) {
  // A pure cosine series: <A(tau)A(0)> = cos(2 pi k / N) / 2 per lag.
  const int n = 16;
  CorrelationAccumulator acc("dipole_x", n, 16, 1.6);
  std::vector<double> s(n);
  for (int j = 0; j < n; ++j) s[j] = std::cos(2.0 * std::numbers::pi * j / n + 0.3);
  acc.add_sample(s);
  ASSERT_TRUE(acc.close_block());
  EXPECT_FALSE(acc.close_block());
  const auto m = acc.mean();
  for (int k = 0; k < n; ++k) EXPECT_NEAR(m[k], 0.5 * std::cos(2.0 * std::numbers::pi * k / n), 1e-14);
  for (int k = 1; k < n; ++k) EXPECT_NEAR(m[k], m[n - k], 1e-14);
  EXPECT_NEAR(acc.observable_mean(), 0.0, 1e-15);
}

TEST(Correlator, DecimationKeepsEveryStrideLag) {
  const int n = 12;
  CorrelationAccumulator fine("separation", n, 12, 1.2), coarse("separation", n, 4, 1.2);
  RandomStream r(1, 0);
  std::vector<double> s(n);
  for (int rep = 0; rep < 5; ++rep) {
    for (auto& v : s) v = 1.0 + r.normal();
    fine.add_sample(s);
    coarse.add_sample(s);
  }
  fine.close_block();
  coarse.close_block();
  EXPECT_EQ(coarse.n_bins(), 4);
  EXPECT_EQ(coarse.stride(), 3);
  for (int b = 0; b < 4; ++b) EXPECT_NEAR(coarse.mean()[b], fine.mean()[3 * b], 1e-13);
}

TEST(Correlator, ConnectedAndLeaveOneOut) {
  CorrelationAccumulator acc("separation", 4, 4, 1.0);
  acc.add_block({5.0, 4.5, 4.2, 4.5}, 2.0);
  acc.add_block({6.0, 5.5, 5.2, 5.5}, 2.2);
  acc.add_block({5.5, 5.0, 4.7, 5.0}, 2.1);
  EXPECT_NEAR(acc.observable_mean(), 2.1, 1e-14);
  EXPECT_NEAR(acc.connected()[0], 5.5 - 2.1 * 2.1, 1e-13);
  EXPECT_NEAR(acc.mean(1)[0], 5.25, 1e-14);
  EXPECT_NEAR(acc.connected(0)[2], 4.95 - 2.15 * 2.15, 1e-13);
  CorrelationAccumulator other("separation", 4, 4, 1.0);
  other.add_block({1.0, 1.0, 1.0, 1.0}, 1.0);
  acc.merge(other);
  EXPECT_EQ(acc.n_blocks(), 4);
  acc.drop_blocks(1);
  EXPECT_EQ(acc.n_blocks(), 3);
  EXPECT_NEAR(acc.blocks()[0][0], 6.0, 0.0);
}

TEST(Correlator, ShoDipoleSeriesFromSampler) {
  auto spec = support::sho_spec(1.0, 2.0, 0.1);
  const auto ctx = support::make_context(spec);
  PathConfiguration c(ctx->n_slices(), ctx->spec().species_of_particle());
  for (int j = 0; j < c.n_slices(); ++j) c.bead(0, j) = {0.01 * j, 0.0, 0.0};
  std::vector<double> s(c.n_slices());
  observable_series(*ctx, c, Observable::dipole_x, s);
  EXPECT_NEAR(s[7], 0.07, 1e-15);  // charge +1
}

}  // namespace
