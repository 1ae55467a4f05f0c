#pragma once

#include <filesystem>
#include <vector>

#include "pimol/sampler.hpp"

namespace pimol {

struct CheckpointData {
  std::vector<ChainState> chains;
  std::vector<std::vector<BlockResult>> blocks;
};

/// CBOR document with the normalized configuration text, every chain's
/// beads, RNG counters and move counters, and all finished block results.
/// Written to a temporary file and renamed, so a crash never leaves a
/// half-written checkpoint behind.
void save_checkpoint(const std::filesystem::path& path, const ActionContext& ctx, const std::vector<ChainState>& chains,
                     const std::vector<std::vector<BlockResult>>& blocks);

/// Throws CheckpointMismatch if the file belongs to another configuration.
CheckpointData load_checkpoint(const std::filesystem::path& path, const ActionContext& ctx);

}  // namespace pimol
