#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pimol/pair_action.hpp"

namespace pimol {

/// Raised for unreadable, truncated or foreign table files.
class TableFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Table file layout:
///   line 1  "PIMOL-PAIRACTION v1"
///   line 2  one-line JSON header (mu, z, delta_tau, grid, build parameters)
///   then    n_q*n_s little-endian doubles of u, followed by du/dtau.
/// The writer emits no timestamps, so equal tables give equal bytes.
void write_pair_table(const std::filesystem::path& path, const PairActionTable& table);
PairActionTable read_pair_table(const std::filesystem::path& path);

/// Canonical file name for a channel, e.g. "e-p_dt0.05.pat".
std::string pair_table_filename(const std::string& label, double delta_tau);

/// True when a loaded table was built for these physical and grid inputs.
bool pair_table_matches(const PairActionTable& table, double mu, double z, double delta_tau,
                        const PairActionSettings& settings);

/// Writes one table per tabulated channel of the spec into dir and returns
/// the paths. Existing matching files are rebuilt, not reused.
std::vector<std::filesystem::path> tabulate_channels(const ValidatedSpec& spec, const std::filesystem::path& dir,
                                                     int threads,
                                                     const std::function<void(const std::string&)>& log = {});

/// Tables for every channel of the spec, indexed like pair_channels()
/// (null for fixed pairs). Matching files in dir are loaded; missing or
/// stale ones are tabulated and saved when auto_tabulate is set, otherwise
/// MissingTableError is thrown.
std::vector<std::shared_ptr<const PairActionTable>> load_channel_tables(
    const ValidatedSpec& spec, const std::filesystem::path& dir, bool auto_tabulate, int threads,
    const std::function<void(const std::string&)>& log = {});

}  // namespace pimol
