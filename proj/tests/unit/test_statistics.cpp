#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pimol/rng.hpp"
#include "pimol/statistics.hpp"

namespace {

using namespace pimol;

TEST(Blocking, MeanAndStandardError) {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
  const auto s = summarize_blocks(x);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_NEAR(s.error, std::sqrt(2.5 / 5.0), 1e-14);
  EXPECT_EQ(s.blocks, 5);
}

TEST(Blocking, NeedsTwoBlocks) {
  const std::vector<double> one = {1.0};
  EXPECT_THROW(summarize_blocks(one), std::invalid_argument);
}

TEST(Blocking, FlagsCorrelatedBlocks) {
  std::vector<double> drift(50);
  std::iota(drift.begin(), drift.end(), 0.0);
  EXPECT_TRUE(summarize_blocks(drift).correlated());
  RandomStream r(5, 0);
  std::vector<double> white(400);
  for (auto& x : white) x = r.normal();
  EXPECT_FALSE(summarize_blocks(white).correlated());
}

TEST(Jackknife, LinearStatisticMatchesStandardError) {
  RandomStream r(9, 0);
  std::vector<double> x(40);
  for (auto& v : x) v = 2.0 + r.normal();
  const auto loo = leave_one_out_means(x);
  const auto jk = jackknife(static_cast<int>(x.size()), [&](int k) {
    return k < 0 ? std::accumulate(x.begin(), x.end(), 0.0) / x.size() : loo[k];
  });
  const auto s = summarize_blocks(x);
  EXPECT_NEAR(jk.value, s.mean, 1e-14);
  EXPECT_NEAR(jk.error, s.error, 1e-12);
}

TEST(KolmogorovSmirnov, RejectsWrongDistribution) {
  RandomStream r(1, 0);
  std::vector<double> x(2000);
  for (auto& v : x) v = 1.3 * r.normal();
  const auto cdf = [](double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); };
  EXPECT_LT(ks_pvalue(ks_statistic(x, cdf), x.size()), 1e-4);
}

TEST(KolmogorovSmirnov, PValueOfZeroStatisticIsOne) { EXPECT_NEAR(ks_pvalue(0.0, 100), 1.0, 1e-12); }

}  // namespace
