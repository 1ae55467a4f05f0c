#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pimol/pair_action.hpp"
#include "pimol/pair_action_io.hpp"
#include "pimol/rng.hpp"
#include "test_support.hpp"

namespace {

using namespace pimol;

Vec3 random_point(RandomStream& r, double radius) {
  Vec3 v{};
  for (int d = 0; d < 3; ++d) v[d] = radius * (2.0 * r.uniform() - 1.0);
  return v;
}

TEST(PairTableGrid, CapIsBelowTwoQAndNominalWidth) {
  PairTableGrid g{0.01, 10.0, 50, 20, 1.0};
  for (double q : {0.01, 0.1, 0.5, 1.0, 5.0}) {
    EXPECT_LE(g.s_cap(q), 2.0 * q);
    EXPECT_LE(g.s_cap(q), 1.0);
  }
  EXPECT_NEAR(g.s_cap(100.0), 1.0, 1e-6);
  EXPECT_NEAR(g.q_at(0), 0.01, 1e-15);
  EXPECT_NEAR(g.q_at(49), 10.0, 1e-12);
}

TEST(PairAction, ZeroChargeProductIsIdenticallyZero) {
  const auto t = tabulate_pair_action(1.0, 0.0, 0.05, PairActionSettings{});
  for (double v : t.u_values()) EXPECT_EQ(v, 0.0);
  for (double v : t.du_values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(t.u({0.1, 0.2, 0.3}, {0.2, 0.1, 0.0}), 0.0);
}

TEST(PairAction, MatchesPartialWaveOracle) {
  const auto table = support::fixed_proton_table();
  const auto& f = support::fixtures()["coulomb_pair_action"];
  ASSERT_DOUBLE_EQ(table->mu(), f["mu"].get<double>());
  ASSERT_DOUBLE_EQ(table->z(), f["z"].get<double>());
  ASSERT_DOUBLE_EQ(table->delta_tau(), f["tau"].get<double>());
  int n = 0;
  for (const auto& p : f["points"]) {
    const double q = p["q"], s = p["s"], want = p["u"];
    EXPECT_NEAR(table->u_at(q, s), want, 1e-4 * std::abs(want)) << "q=" << q << " s=" << s;
    ++n;
  }
  EXPECT_EQ(n, 20);
}

TEST(PairAction, FarFieldApproachesPrimitive) {
  const auto table = support::fixed_proton_table();
  const double q = 0.9 * table->grid().q_max;
  EXPECT_NEAR(table->u_at(q, 0.0), 0.05 * -1.0 / q, 1e-4 * 0.05 / q);
  EXPECT_NEAR(table->du_at(q, 0.0), -1.0 / q, 1e-3 / q);
}

TEST(PairAction, InterpolantHitsNodes) {
  const auto table = support::fixed_proton_table();
  const auto& g = table->grid();
  for (int i : {3, 100, 300, g.n_q - 2})
    for (int j : {0, 5, g.n_s / 2}) {
      const double node = table->u_values()[static_cast<std::size_t>(i) * g.n_s + j];
      EXPECT_NEAR(table->u_at(g.q_at(i), g.s_at(i, j)), node, 1e-12 * std::abs(node));
    }
}

TEST(PairAction, SymmetricInEndpoints) {
  const auto table = support::fixed_proton_table();
  RandomStream r(4, 0);
  for (int k = 0; k < 100; ++k) {
    const Vec3 a = random_point(r, 1.0);
    const Vec3 b = a + random_point(r, 0.2);
    EXPECT_DOUBLE_EQ(table->u(a, b), table->u(b, a));
  }
}

TEST(PairAction, GradientMatchesFiniteDifferences) {
  const auto table = support::fixed_proton_table();
  RandomStream r(8, 0);
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    const Vec3 a = random_point(r, 1.5);
    const Vec3 b = a + random_point(r, 0.25);
    table->reset_diagnostics();
    const auto g = table->evaluate(a, b).gradient;
    if (table->out_of_grid_count() != 0) continue;
    const double h = 1e-6;
    Vec3 fa{}, fb{};
    for (int d = 0; d < 3; ++d) {
      Vec3 ap = a, am = a, bp = b, bm = b;
      ap[d] += h;
      am[d] -= h;
      bp[d] += h;
      bm[d] -= h;
      fa[d] = (table->u(ap, b) - table->u(am, b)) / (2.0 * h);
      fb[d] = (table->u(a, bp) - table->u(a, bm)) / (2.0 * h);
    }
    const double scale = norm(g.r) + norm(g.r_prime);
    EXPECT_LE(norm(fa - g.r), 1e-6 * scale) << "k=" << k;
    EXPECT_LE(norm(fb - g.r_prime), 1e-6 * scale) << "k=" << k;
    ++checked;
  }
  EXPECT_GT(checked, 150);
}

TEST(PairAction, OutOfGridQueriesAreCountedAndFallBack) {
  const auto table = support::fixed_proton_table();
  table->reset_diagnostics();
  const double far = 2.0 * table->grid().q_max;
  EXPECT_DOUBLE_EQ(table->u({far, 0, 0}, {far, 0, 0}), 0.05 * -1.0 / far);
  EXPECT_EQ(table->out_of_grid_count(), 1u);
  const double tiny = 0.1 * table->grid().q_min;
  EXPECT_DOUBLE_EQ(table->u_at(tiny, 0.0), table->u_at(table->grid().q_min, 0.0));
  EXPECT_EQ(table->out_of_grid_count(), 2u);
  table->u_at(1.0, 10.0);  // beyond s_cap
  EXPECT_EQ(table->out_of_grid_count(), 3u);
  table->reset_diagnostics();
  EXPECT_EQ(table->out_of_grid_count(), 0u);
}

TEST(PairActionIo, RoundTripIsByteExact) {
  const auto table = support::fixed_proton_table();
  const auto dir = std::filesystem::temp_directory_path() / "pimol_io_test";
  std::filesystem::create_directories(dir);
  write_pair_table(dir / "a.pat", *table);
  const auto back = read_pair_table(dir / "a.pat");
  write_pair_table(dir / "b.pat", back);
  std::ifstream fa(dir / "a.pat", std::ios::binary), fb(dir / "b.pat", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(sa, sb);
  EXPECT_EQ(back.grid(), table->grid());
  EXPECT_EQ(back.build(), table->build());
  EXPECT_TRUE(pair_table_matches(back, 1.0, -1.0, 0.05, PairActionSettings{}));
  PairActionSettings other;
  other.q_points = 100;
  EXPECT_FALSE(pair_table_matches(back, 1.0, -1.0, 0.05, other));
  EXPECT_FALSE(pair_table_matches(back, 1.0, -1.0, 0.01, PairActionSettings{}));
}

TEST(PairActionIo, TruncatedOrForeignFilesAreRejected) {
  const auto dir = std::filesystem::temp_directory_path() / "pimol_io_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "junk.pat") << "hello\n";
  EXPECT_THROW(read_pair_table(dir / "junk.pat"), TableFileError);
  const auto table = support::fixed_proton_table();
  write_pair_table(dir / "c.pat", *table);
  std::filesystem::resize_file(dir / "c.pat", std::filesystem::file_size(dir / "c.pat") - 8);
  EXPECT_THROW(read_pair_table(dir / "c.pat"), TableFileError);
  EXPECT_THROW(read_pair_table(dir / "missing.pat"), TableFileError);
}

TEST(PairActionIo, FileNameIsCanonical) { EXPECT_EQ(pair_table_filename("e-p", 0.05), "e-p_dt0.05.pat"); }

}  // namespace
