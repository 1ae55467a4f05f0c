#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "pimol/action.hpp"
#include "pimol/estimators.hpp"
#include "pimol/greens.hpp"
#include "pimol/rng.hpp"
#include "pimol/statistics.hpp"

namespace pimol {

struct MoveCounters {
  std::vector<std::uint64_t> bisection_attempts;  // per level, index 0 = finest
  std::vector<std::uint64_t> bisection_accepts;
  std::uint64_t displace_attempts = 0;
  std::uint64_t displace_accepts = 0;

  explicit MoveCounters(int levels = 0) : bisection_attempts(levels, 0), bisection_accepts(levels, 0) {}
  void merge(const MoveCounters& o);
  double bisection_acceptance() const;  // whole-move acceptance
  double displace_acceptance() const;
  bool operator==(const MoveCounters&) const = default;
};

/// One independent Markov chain. Stream id = chain index, so chains never
/// share random numbers.
struct ChainState {
  int chain = 0;
  PathConfiguration config;
  RandomStream rng;
  MoveCounters counters;
  int block_index = 0;  // blocks completed

  ChainState(int chain_index, PathConfiguration c, RandomStream r, int levels)
      : chain(chain_index), config(std::move(c)), rng(r), counters(levels) {}
};

ChainState make_chain(const ActionContext& ctx, std::uint64_t seed, int chain);

/// Multilevel bisection of a random window of 2^levels + 1 slices. Returns
/// true if accepted. A rejection leaves the configuration untouched.
bool bisection_move(ChainState& state, const ActionContext& ctx, int particle, int levels);

/// Rigid translation of one particle's whole path by a uniform vector in
/// [-step, step]^d.
bool displace_move(ChainState& state, const ActionContext& ctx, int particle, double step);

/// One sweep: N / 2^L bisection attempts per mobile particle, then a
/// displacement attempt per mobile particle with the configured probability.
void sweep(ChainState& state, const ActionContext& ctx);

/// Per-block output of one chain.
struct BlockResult {
  int index = 0;
  std::vector<double> estimators;                 // block means per column
  std::vector<std::vector<double>> correlators;   // block means per correlator
  std::vector<double> observables;                // block mean of each correlator's observable
  MoveCounters counters;                          // moves made during the block
};

/// Owns the estimator set and correlator accumulators of one chain.
class ChainRecorder {
 public:
  ChainRecorder(const ActionContext& ctx);
  const EstimatorSet& estimators() const { return estimators_; }
  const std::vector<Observable>& observables() const { return observables_; }
  void record(const PathConfiguration& config);
  BlockResult close_block(int index, const MoveCounters& counters);

 private:
  const ActionContext* ctx_;
  EstimatorSet estimators_;
  std::vector<Observable> observables_;
  std::vector<CorrelationAccumulator> correlators_;
  std::vector<double> sums_;
  std::vector<double> sample_;
  std::vector<double> series_;
  std::size_t count_ = 0;
};

/// Runs sweeps_per_block sweeps, recording after each, and closes the block.
BlockResult run_block(ChainState& state, const ActionContext& ctx, ChainRecorder& recorder);

struct EstimatorTrace {
  std::string name;
  std::string unit;
  std::vector<double> blocks;  // production blocks, chain-major order
  BlockSummary summary;
};

struct SimulationResult {
  int n_chains = 0;
  int equilibration_blocks = 0;  // discarded per chain
  int production_blocks = 0;     // kept per chain
  std::vector<EstimatorTrace> estimators;
  std::vector<CorrelationAccumulator> correlators;  // merged production blocks
  MoveCounters counters;                            // production blocks, all chains
  std::uint64_t out_of_grid = 0;
  std::vector<std::vector<BlockResult>> chain_blocks;  // all blocks, per chain

  const EstimatorTrace* estimator(const std::string& name) const;
  const CorrelationAccumulator* correlator(const std::string& name) const;
};

/// Thrown when a checkpoint does not belong to the current configuration.
class CheckpointMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  int threads = 1;
  std::filesystem::path checkpoint;  // empty: no checkpointing
  bool resume = false;
  int checkpoint_every = 1;          // blocks
  /// Stop (after checkpointing) once this many blocks are done; -1 = run all.
  int stop_after_blocks = -1;
  std::function<void(int done, int total)> progress;
};

/// Runs n_chains chains in parallel, block by block, and merges the
/// production blocks in chain order so the result does not depend on
/// scheduling or thread count.
SimulationResult run_simulation(const ActionContext& ctx, const RunOptions& options = {});

/// Builds the merged result from per-chain block lists.
SimulationResult merge_chains(const ActionContext& ctx, std::vector<std::vector<BlockResult>> chain_blocks);

}  // namespace pimol
