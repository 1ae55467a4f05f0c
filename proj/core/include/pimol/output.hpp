#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimol/greens.hpp"
#include "pimol/sampler.hpp"

namespace pimol {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unit label of a correlator's values ("bohr^2" or "(e bohr)^2").
std::string correlator_unit(const std::string& name);

/// Columnar text: "# block <name> [unit]" then one row per block.
void write_trace(const std::filesystem::path& path, const EstimatorTrace& trace);

/// tau, mean, standard error; metadata in '#' lines.
void write_correlator(const std::filesystem::path& path, const CorrelationAccumulator& acc);

/// Every block mean of a correlator (first column: block mean of the
/// observable), enough to rebuild the accumulator for jackknife analysis.
void write_correlator_blocks(const std::filesystem::path& path, const CorrelationAccumulator& acc);
CorrelationAccumulator read_correlator_blocks(const std::filesystem::path& path);

/// n, w_n, Re G, Im G, error.
void write_spectrum(const std::filesystem::path& path, const MatsubaraSpectrum& spectrum, const std::string& unit);

/// JSON summary: estimator means and errors with units, acceptance rates,
/// block bookkeeping and out-of-grid pair evaluations.
std::string summary_json(const SimulationResult& result);

/// Writes traces/, correlators/, spectra/ and summary.json under dir and
/// returns the files written, relative to dir.
std::vector<std::filesystem::path> write_run_outputs(const std::filesystem::path& dir, const SimulationResult& result,
                                                     int matsubara_max);

/// Text files are written in full to a temporary name, then renamed.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pimol
