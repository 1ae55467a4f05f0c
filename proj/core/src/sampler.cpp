#include "pimol/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "checkpoint.hpp"
#include "parallel.hpp"

namespace pimol {

void MoveCounters::merge(const MoveCounters& o) {
  if (bisection_attempts.size() < o.bisection_attempts.size()) {
    bisection_attempts.resize(o.bisection_attempts.size(), 0);
    bisection_accepts.resize(o.bisection_accepts.size(), 0);
  }
  for (std::size_t i = 0; i < o.bisection_attempts.size(); ++i) {
    bisection_attempts[i] += o.bisection_attempts[i];
    bisection_accepts[i] += o.bisection_accepts[i];
  }
  displace_attempts += o.displace_attempts;
  displace_accepts += o.displace_accepts;
}

double MoveCounters::bisection_acceptance() const {
  if (bisection_attempts.empty() || bisection_attempts.back() == 0) return 0.0;
  // Every move starts at the coarsest level and is accepted only at level 0.
  return static_cast<double>(bisection_accepts.front()) / static_cast<double>(bisection_attempts.back());
}

double MoveCounters::displace_acceptance() const {
  return displace_attempts ? static_cast<double>(displace_accepts) / static_cast<double>(displace_attempts) : 0.0;
}

ChainState make_chain(const ActionContext& ctx, std::uint64_t seed, int chain) {
  RandomStream rng(seed, static_cast<std::uint64_t>(chain));
  PathConfiguration config = build_initial_configuration(ctx.spec(), rng);
  return ChainState(chain, std::move(config), rng, ctx.spec().spec().sampling.bisection_levels);
}

namespace {

// Non-kinetic action carried by one bead of `particle` at `slice`, used to
// judge coarse bisection levels: diagonal pair actions plus the external
// potential, all at the link time step.
template <class BeadOf>
double bead_potential(const ActionContext& ctx, int particle, int slice, const BeadOf& bead_of) {
  const Vec3& r = bead_of(particle, slice);
  double v = ctx.delta_tau() * ctx.external_potential(r, particle);
  for (int idx : ctx.pairs_of(particle)) {
    const auto& t = ctx.pairs()[idx];
    const Vec3 rel = t.a == particle ? r - bead_of(t.b, slice) : bead_of(t.a, slice) - r;
    v += pair_link_action(t, ctx.delta_tau(), rel, rel);
  }
  return v;
}

}  // namespace

bool bisection_move(ChainState& state, const ActionContext& ctx, int particle, int levels) {
  auto& config = state.config;
  auto& rng = state.rng;
  const int n = config.n_slices();
  const int span = 1 << levels;
  const int dims = ctx.dimensions();
  const int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  const double sigma_unit = std::sqrt(ctx.delta_tau() / (2.0 * ctx.mass(particle)));

  std::vector<Vec3> fresh(span + 1);
  for (int k = 0; k <= span; ++k) fresh[k] = config.bead(particle, first + k);

  auto old_bead = [&](int p, int slice) -> const Vec3& { return config.bead(p, slice); };
  auto new_bead = [&](int p, int slice) -> const Vec3& {
    if (p == particle) {
      int o = (slice - first) % n;
      if (o < 0) o += n;
      if (o <= span) return fresh[o];
    }
    return config.bead(p, slice);
  };

  double previous = 0.0;
  for (int level = levels - 1; level >= 0; --level) {
    const int stride = 1 << level;
    const double sigma = sigma_unit * std::sqrt(static_cast<double>(stride));
    for (int k = stride; k < span; k += 2 * stride) {
      Vec3 mid = (fresh[k - stride] + fresh[k + stride]) * 0.5;
      for (int d = 0; d < dims; ++d) mid[d] += sigma * rng.normal();
      fresh[k] = mid;
    }
    ++state.counters.bisection_attempts[level];
    double current;
    if (level > 0) {
      current = 0.0;
      for (int k = stride; k < span; k += stride)
        current += stride * (bead_potential(ctx, particle, first + k, new_bead) -
                             bead_potential(ctx, particle, first + k, old_bead));
    } else {
      Proposal prop;
      prop.particles = {particle};
      prop.first = first + 1;
      prop.count = span - 1;
      prop.beads.assign(fresh.begin() + 1, fresh.end() - 1);
      current = ctx.action_difference(config, prop).potential;
    }
    const double log_ratio = -(current - previous);
    if (log_ratio < 0.0 && rng.uniform() >= std::exp(log_ratio)) return false;
    ++state.counters.bisection_accepts[level];
    previous = current;
  }
  for (int k = 1; k < span; ++k) config.bead(particle, first + k) = fresh[k];
  return true;
}

bool displace_move(ChainState& state, const ActionContext& ctx, int particle, double step) {
  auto& config = state.config;
  const int n = config.n_slices();
  Vec3 shift{};
  for (int d = 0; d < ctx.dimensions(); ++d) shift[d] = step * (2.0 * state.rng.uniform() - 1.0);
  ++state.counters.displace_attempts;
  Proposal prop;
  prop.particles = {particle};
  prop.first = 0;
  prop.count = n;
  prop.beads.resize(n);
  const auto path = config.path(particle);
  for (int j = 0; j < n; ++j) prop.beads[j] = path[j] + shift;
  const double du = ctx.action_difference(config, prop).potential;
  if (du > 0.0 && state.rng.uniform() >= std::exp(-du)) return false;
  std::copy(prop.beads.begin(), prop.beads.end(), path.begin());
  ++state.counters.displace_accepts;
  return true;
}

void sweep(ChainState& state, const ActionContext& ctx) {
  const auto& smp = ctx.spec().spec().sampling;
  const int levels = smp.bisection_levels;
  const int windows = std::max(1, ctx.n_slices() >> levels);
  for (int p : ctx.spec().mobile_particles())
    for (int w = 0; w < windows; ++w) bisection_move(state, ctx, p, levels);
  if (smp.displace_move_probability > 0.0 && smp.displace_step > 0.0)
    for (int p : ctx.spec().mobile_particles())
      if (state.rng.uniform() < smp.displace_move_probability) displace_move(state, ctx, p, smp.displace_step);
}

ChainRecorder::ChainRecorder(const ActionContext& ctx)
    : ctx_(&ctx), estimators_(ctx, ctx.spec().spec().outputs.estimators) {
  const auto& out = ctx.spec().spec().outputs;
  for (const auto& name : out.correlators) {
    observables_.push_back(parse_observable(name));
    correlators_.emplace_back(name, ctx.n_slices(), out.correlator_bins, ctx.spec().beta());
  }
  sums_.assign(estimators_.size(), 0.0);
  sample_.assign(estimators_.size(), 0.0);
  series_.assign(ctx.n_slices(), 0.0);
}

void ChainRecorder::record(const PathConfiguration& config) {
  estimators_.evaluate(config, sample_);
  for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += sample_[i];
  for (std::size_t c = 0; c < correlators_.size(); ++c) {
    observable_series(*ctx_, config, observables_[c], series_);
    correlators_[c].add_sample(series_);
  }
  ++count_;
}

BlockResult ChainRecorder::close_block(int index, const MoveCounters& counters) {
  if (count_ == 0) throw std::logic_error("empty block: no sweeps were recorded");
  BlockResult r;
  r.index = index;
  r.counters = counters;
  r.estimators.resize(sums_.size());
  for (std::size_t i = 0; i < sums_.size(); ++i) r.estimators[i] = sums_[i] / static_cast<double>(count_);
  for (auto& acc : correlators_) {
    acc.close_block();
    r.correlators.push_back(acc.blocks().back());
    r.observables.push_back(acc.observable_blocks().back());
    acc.drop_blocks(1);
  }
  std::fill(sums_.begin(), sums_.end(), 0.0);
  count_ = 0;
  return r;
}

BlockResult run_block(ChainState& state, const ActionContext& ctx, ChainRecorder& recorder) {
  const int sweeps = ctx.spec().spec().sampling.sweeps_per_block;
  if (sweeps < 1) throw std::invalid_argument("run_block: sweeps_per_block must be at least 1");
  const MoveCounters before = state.counters;
  for (int s = 0; s < sweeps; ++s) {
    sweep(state, ctx);
    recorder.record(state.config);
  }
  MoveCounters during(static_cast<int>(before.bisection_attempts.size()));
  for (std::size_t i = 0; i < during.bisection_attempts.size(); ++i) {
    during.bisection_attempts[i] = state.counters.bisection_attempts[i] - before.bisection_attempts[i];
    during.bisection_accepts[i] = state.counters.bisection_accepts[i] - before.bisection_accepts[i];
  }
  during.displace_attempts = state.counters.displace_attempts - before.displace_attempts;
  during.displace_accepts = state.counters.displace_accepts - before.displace_accepts;
  BlockResult r = recorder.close_block(state.block_index, during);
  ++state.block_index;
  return r;
}

const EstimatorTrace* SimulationResult::estimator(const std::string& name) const {
  for (const auto& e : estimators)
    if (e.name == name) return &e;
  return nullptr;
}

const CorrelationAccumulator* SimulationResult::correlator(const std::string& name) const {
  for (const auto& c : correlators)
    if (c.name() == name) return &c;
  return nullptr;
}

SimulationResult merge_chains(const ActionContext& ctx, std::vector<std::vector<BlockResult>> chain_blocks) {
  const auto& spec = ctx.spec().spec();
  SimulationResult res;
  res.n_chains = static_cast<int>(chain_blocks.size());
  res.equilibration_blocks =
      static_cast<int>(std::floor(spec.sampling.equilibration_fraction * spec.sampling.n_blocks));
  res.production_blocks = spec.sampling.n_blocks - res.equilibration_blocks;

  const EstimatorSet set(ctx, spec.outputs.estimators);
  for (std::size_t i = 0; i < set.size(); ++i) res.estimators.push_back({set.columns()[i], set.units()[i], {}, {}});
  for (const auto& name : spec.outputs.correlators)
    res.correlators.emplace_back(name, ctx.n_slices(), spec.outputs.correlator_bins, ctx.spec().beta());
  res.counters = MoveCounters(spec.sampling.bisection_levels);

  for (const auto& blocks : chain_blocks) {
    for (const auto& b : blocks) {
      if (b.index < res.equilibration_blocks) continue;
      for (std::size_t i = 0; i < b.estimators.size(); ++i) res.estimators[i].blocks.push_back(b.estimators[i]);
      for (std::size_t c = 0; c < b.correlators.size(); ++c) res.correlators[c].add_block(b.correlators[c], b.observables[c]);
      res.counters.merge(b.counters);
    }
  }
  for (auto& e : res.estimators)
    if (e.blocks.size() >= 2) e.summary = summarize_blocks(e.blocks);
  for (const auto& t : ctx.pairs())
    if (t.table) res.out_of_grid = std::max(res.out_of_grid, t.table->out_of_grid_count());
  res.chain_blocks = std::move(chain_blocks);
  return res;
}

SimulationResult run_simulation(const ActionContext& ctx, const RunOptions& options) {
  const auto& spec = ctx.spec().spec();
  const int n_chains = spec.sampling.n_chains;
  const int total = spec.sampling.n_blocks;

  std::vector<ChainState> chains;
  std::vector<std::vector<BlockResult>> blocks(n_chains);
  const bool resuming = options.resume && !options.checkpoint.empty() && std::filesystem::exists(options.checkpoint);
  if (resuming) {
    auto cp = load_checkpoint(options.checkpoint, ctx);
    chains = std::move(cp.chains);
    blocks = std::move(cp.blocks);
  } else {
    if (options.resume && !options.checkpoint.empty())
      throw CheckpointMismatch("no checkpoint to resume from at " + options.checkpoint.string());
    chains.reserve(n_chains);
    for (int c = 0; c < n_chains; ++c) chains.push_back(make_chain(ctx, spec.sampling.rng_seed, c));
  }

  std::vector<std::unique_ptr<ChainRecorder>> recorders;
  for (int c = 0; c < n_chains; ++c) recorders.push_back(std::make_unique<ChainRecorder>(ctx));

  int done = chains.empty() ? 0 : chains.front().block_index;
  int since_checkpoint = 0;
  while (done < total) {
    if (options.stop_after_blocks >= 0 && done >= options.stop_after_blocks) break;
    detail::parallel_for(n_chains, options.threads, [&](int c, int) {
      blocks[c].push_back(run_block(chains[c], ctx, *recorders[c]));
    });
    ++done;
    ++since_checkpoint;
    if (!options.checkpoint.empty() && (since_checkpoint >= options.checkpoint_every || done == total)) {
      save_checkpoint(options.checkpoint, ctx, chains, blocks);
      since_checkpoint = 0;
    }
    if (options.progress) options.progress(done, total);
  }
  if (!options.checkpoint.empty() && since_checkpoint > 0) save_checkpoint(options.checkpoint, ctx, chains, blocks);
  return merge_chains(ctx, std::move(blocks));
}

}  // namespace pimol
