#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pimol/action.hpp"

namespace pimol {

/// Thermodynamic (tau-derivative) energy estimator of one configuration, Ha.
double thermodynamic_energy(const ActionContext& ctx, const PathConfiguration& config);

/// Centroid virial energy estimator, Ha. Deviations are taken from each
/// mobile particle's path centroid; fixed particles only enter through the
/// forces they exert.
double virial_energy(const ActionContext& ctx, const PathConfiguration& config);

/// Slice-averaged total dipole sum_i q_i r_i (atomic units).
Vec3 polarization(const ActionContext& ctx, const PathConfiguration& config);

/// Slice averages of |r_a - r_b| and |r_a - r_b|^2.
std::pair<double, double> separation_moments(const PathConfiguration& config, int a, int b);

/// The requested scalar estimators, flattened into named columns:
/// energy_thermodynamic, energy_virial, polarization_{x,y,z},
/// separation and separation_sq.
class EstimatorSet {
 public:
  EstimatorSet(const ActionContext& ctx, const std::vector<std::string>& requested);

  const std::vector<std::string>& columns() const { return columns_; }
  /// Unit label per column.
  const std::vector<std::string>& units() const { return units_; }
  std::size_t size() const { return columns_.size(); }
  void evaluate(const PathConfiguration& config, std::span<double> out) const;

 private:
  const ActionContext* ctx_;
  bool energy_t_ = false, energy_v_ = false, polarization_ = false, separation_ = false;
  std::vector<std::string> columns_;
  std::vector<std::string> units_;
};

}  // namespace pimol
