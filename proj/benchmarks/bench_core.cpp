// Microbenchmarks of the inner loops: table lookup, action differences,
// sweeps and the Matsubara transform. Tables are tabulated once at startup
// with a coarse grid (lookup cost does not depend on the grid size).
#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <vector>

#include "pimol/action.hpp"
#include "pimol/greens.hpp"
#include "pimol/model.hpp"
#include "pimol/pair_action.hpp"
#include "pimol/rng.hpp"
#include "pimol/sampler.hpp"

namespace {

using namespace pimol;

PairActionSettings coarse() {
  PairActionSettings s;
  s.q_points = 64;
  s.s_points = 16;
  return s;
}

SystemSpec hydrogen(int levels) {
  SystemSpec s;
  s.name = "bench_h";
  s.beta = 20.0;
  s.delta_tau = 0.05;
  s.pair_action = coarse();
  s.sampling.bisection_levels = levels;
  s.sampling.displace_move_probability = 1.0;
  s.sampling.displace_step = 0.5;
  SpeciesSpec e{.name = "e", .mass = 1.0, .charge = -1.0, .count = 1};
  e.start_positions = std::vector<Vec3>{{0.6, -0.3, 0.8}};
  SpeciesSpec p{.name = "p", .mass = 1836.15267, .charge = 1.0, .count = 1};
  p.fixed_positions = std::vector<Vec3>{{0.0, 0.0, 0.0}};
  s.species = {e, p};
  return s;
}

const std::shared_ptr<const PairActionTable>& ep_table() {
  static const auto t = std::make_shared<const PairActionTable>(tabulate_pair_action(1.0, -1.0, 0.05, coarse(), 1));
  return t;
}

std::shared_ptr<const ActionContext> hydrogen_context(int levels) {
  auto v = validate_spec(hydrogen(levels));
  return std::make_shared<const ActionContext>(std::move(v), std::vector<std::shared_ptr<const PairActionTable>>{ep_table()});
}

void BM_PairTableU(benchmark::State& state) {
  const auto& t = *ep_table();
  RandomStream r(1, 0);
  std::vector<std::pair<Vec3, Vec3>> pts(1024);
  for (auto& [a, b] : pts) {
    a = {r.normal(), r.normal(), r.normal()};
    b = a + Vec3{0.2 * r.normal(), 0.2 * r.normal(), 0.2 * r.normal()};
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pts[i++ & 1023];
    benchmark::DoNotOptimize(t.u(a, b));
  }
}
BENCHMARK(BM_PairTableU);

void BM_PairTableEvaluate(benchmark::State& state) {
  const auto& t = *ep_table();
  const Vec3 a{0.3, -0.4, 0.5}, b{0.35, -0.3, 0.45};
  for (auto _ : state) benchmark::DoNotOptimize(t.evaluate(a, b));
}
BENCHMARK(BM_PairTableEvaluate);

void BM_ActionDifference(benchmark::State& state) {
  const auto ctx = hydrogen_context(3);
  const auto chain = make_chain(*ctx, 1, 0);
  RandomStream r(2, 0);
  Proposal prop;
  prop.particles = {0};
  prop.first = 10;
  prop.count = static_cast<int>(state.range(0));
  for (int k = 0; k < prop.count; ++k) {
    Vec3 b = chain.config.bead(0, prop.first + k);
    b[0] += 0.05 * r.normal();
    prop.beads.push_back(b);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ctx->action_difference(chain.config, prop));
}
BENCHMARK(BM_ActionDifference)->Arg(7)->Arg(63);

void BM_SweepHydrogen(benchmark::State& state) {
  const auto ctx = hydrogen_context(static_cast<int>(state.range(0)));
  auto chain = make_chain(*ctx, 3, 0);
  for (int s = 0; s < 200; ++s) sweep(chain, *ctx);
  for (auto _ : state) sweep(chain, *ctx);
  state.SetItemsProcessed(state.iterations() * ctx->n_slices());
}
BENCHMARK(BM_SweepHydrogen)->Arg(3)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_Matsubara(benchmark::State& state) {
  const int bins = static_cast<int>(state.range(0));
  std::vector<double> g(bins);
  for (int j = 0; j < bins; ++j) g[j] = std::cosh(0.5 - static_cast<double>(j) / bins);
  for (auto _ : state) benchmark::DoNotOptimize(to_matsubara(g, 200.0, 64, true));
}
BENCHMARK(BM_Matsubara)->Arg(400)->Arg(4000);

void BM_CorrelatorSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CorrelationAccumulator acc("dipole_x", n, 4096, 200.0);
  std::vector<double> series(n);
  RandomStream r(4, 0);
  for (auto& x : series) x = r.normal();
  for (auto _ : state) acc.add_sample(series);
}
BENCHMARK(BM_CorrelatorSample)->Arg(400)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
