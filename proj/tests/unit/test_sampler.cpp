#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "pimol/sampler.hpp"
#include "pimol/statistics.hpp"
#include "sho.hpp"
#include "test_support.hpp"

namespace {

using namespace pimol;

TEST(Sampler, FreeParticleBridgeDisplacementIsGaussian) {
  // Slices 0 and N/2 of a free closed path differ by a Gaussian of
  // variance beta/(4m) per dimension.
  auto spec = support::free_particle_spec(1.6, 0.1, 1.0);
  spec.sampling.bisection_levels = 3;
  const auto ctx = support::make_context(spec);
  auto chain = make_chain(*ctx, 77, 0);
  const int n = ctx->n_slices();
  const double sigma = std::sqrt(1.6 / 4.0);
  std::vector<double> x;
  for (int s = 0; s < 200; ++s) sweep(chain, *ctx);
  for (int s = 0; s < 30000; ++s) {
    sweep(chain, *ctx);
    if (s % 10 != 0) continue;
    x.push_back((chain.config.bead(0, 0)[0] - chain.config.bead(0, n / 2)[0]) / sigma);
  }
  const double p = ks_pvalue(ks_statistic(x, [](double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }), x.size());
  EXPECT_GT(p, 0.01);
}

TEST(Sampler, ConfinedPathsStayInside) {
  auto spec = support::free_particle_spec(1.6, 0.1, 1.0);
  spec.species[0].start_positions = std::vector<Vec3>{{0.0, 0.0, 0.0}};
  spec.confinement_radius = 0.8;
  spec.sampling.bisection_levels = 3;
  spec.sampling.displace_move_probability = 1.0;
  spec.sampling.displace_step = 0.5;
  const auto ctx = support::make_context(spec);
  auto chain = make_chain(*ctx, 5, 0);
  double widest = 0.0;
  for (int s = 0; s < 3000; ++s) {
    sweep(chain, *ctx);
    for (const auto& b : chain.config.path(0)) widest = std::max(widest, norm(b));
  }
  EXPECT_LE(widest, 0.8);
  EXPECT_GT(widest, 0.7);
}

TEST(Sampler, ShoMatchesDiscretizedChainVariance) {
  auto spec = support::sho_spec(1.0, 2.0, 0.1);
  spec.sampling.bisection_levels = 2;
  spec.sampling.displace_move_probability = 1.0;  // the centroid carries most of <x^2>
  spec.sampling.displace_step = 1.0;
  const auto ctx = support::make_context(spec);
  auto chain = make_chain(*ctx, 3, 0);
  for (int s = 0; s < 500; ++s) sweep(chain, *ctx);
  std::vector<double> blocks;
  for (int b = 0; b < 40; ++b) {
    double sum = 0.0;
    for (int s = 0; s < 2000; ++s) {
      sweep(chain, *ctx);
      for (const auto& r : chain.config.path(0)) sum += r[0] * r[0];
    }
    blocks.push_back(sum / (2000.0 * ctx->n_slices()));
  }
  const auto st = summarize_blocks(blocks);
  const double want = oracle::discretized_sho_variance({1.0, 1.0, 2.0}, 0.1);
  EXPECT_NEAR(st.mean, want, 4.0 * st.error) << "error " << st.error;
  EXPECT_LT(st.error, 0.02 * want);
}

TEST(Sampler, RejectionLeavesPathUntouchedAndCountsMoves) {
  const auto ctx = support::make_context(support::sho_spec(1.0, 2.0, 0.1));
  auto chain = make_chain(*ctx, 1, 0);
  for (int k = 0; k < 200; ++k) {
    const auto before = chain.config;
    const bool ok = bisection_move(chain, *ctx, 0, 2);
    if (!ok) {
      for (int j = 0; j < ctx->n_slices(); ++j) ASSERT_EQ(chain.config.bead(0, j), before.bead(0, j));
    }
  }
  std::uint64_t attempts = 0;
  for (auto a : chain.counters.bisection_attempts) attempts += a;
  EXPECT_GE(attempts, 200u);
  EXPECT_EQ(chain.counters.bisection_attempts.size(), 3u);
}

SystemSpec small_run_spec() {
  auto spec = support::sho_spec(1.0, 2.0, 0.1);
  spec.sampling.n_chains = 3;
  spec.sampling.n_blocks = 6;
  spec.sampling.sweeps_per_block = 20;
  spec.sampling.equilibration_fraction = 0.34;
  spec.sampling.rng_seed = 2024;
  spec.outputs.estimators = {"energy_thermodynamic", "energy_virial", "polarization"};
  spec.outputs.correlators = {"dipole_x"};
  spec.outputs.correlator_bins = 10;
  return spec;
}

void expect_same(const SimulationResult& a, const SimulationResult& b) {
  ASSERT_EQ(a.estimators.size(), b.estimators.size());
  for (std::size_t i = 0; i < a.estimators.size(); ++i) EXPECT_EQ(a.estimators[i].blocks, b.estimators[i].blocks);
  ASSERT_EQ(a.correlators.size(), b.correlators.size());
  for (std::size_t i = 0; i < a.correlators.size(); ++i) EXPECT_EQ(a.correlators[i].blocks(), b.correlators[i].blocks());
  EXPECT_EQ(a.counters, b.counters);
}

TEST(Simulation, BookkeepingAndDeterminism) {
  const auto ctx = support::make_context(small_run_spec());
  const auto a = run_simulation(*ctx);
  EXPECT_EQ(a.equilibration_blocks, 2);
  EXPECT_EQ(a.production_blocks, 4);
  EXPECT_EQ(a.estimator("energy_virial")->blocks.size(), 12u);
  EXPECT_EQ(a.correlator("dipole_x")->n_blocks(), 12);
  EXPECT_EQ(a.correlator("dipole_x")->n_bins(), 10);
  const auto b = run_simulation(*ctx);
  expect_same(a, b);
}

TEST(Simulation, ThreadCountDoesNotChangeResults) {
  const auto ctx = support::make_context(small_run_spec());
  RunOptions one, three;
  three.threads = 3;
  expect_same(run_simulation(*ctx, one), run_simulation(*ctx, three));
}

TEST(Simulation, ResumeReproducesUninterruptedRun) {
  const auto ctx = support::make_context(small_run_spec());
  const auto dir = std::filesystem::temp_directory_path() / "pimol_ckpt_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  RunOptions first;
  first.checkpoint = dir / "run.ckpt";
  first.stop_after_blocks = 3;
  run_simulation(*ctx, first);
  ASSERT_TRUE(std::filesystem::exists(first.checkpoint));
  RunOptions second;
  second.checkpoint = first.checkpoint;
  second.resume = true;
  second.threads = 2;
  expect_same(run_simulation(*ctx, second), run_simulation(*ctx));
}

TEST(Simulation, CheckpointFromAnotherConfigIsRefused) {
  const auto ctx = support::make_context(small_run_spec());
  const auto dir = std::filesystem::temp_directory_path() / "pimol_ckpt_test2";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  RunOptions first;
  first.checkpoint = dir / "run.ckpt";
  first.stop_after_blocks = 2;
  run_simulation(*ctx, first);
  auto other = small_run_spec();
  other.sampling.rng_seed = 7;
  const auto ctx2 = support::make_context(other);
  RunOptions again;
  again.checkpoint = first.checkpoint;
  again.resume = true;
  EXPECT_THROW(run_simulation(*ctx2, again), CheckpointMismatch);
  RunOptions missing;
  missing.checkpoint = dir / "nope.ckpt";
  missing.resume = true;
  EXPECT_THROW(run_simulation(*ctx, missing), CheckpointMismatch);
}

TEST(Simulation, ChainsUseDistinctStreams) {
  const auto ctx = support::make_context(small_run_spec());
  const auto r = run_simulation(*ctx);
  EXPECT_NE(r.chain_blocks[0].back().estimators, r.chain_blocks[1].back().estimators);
}

}  // namespace
