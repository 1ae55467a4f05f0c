#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimol/model.hpp"
#include "pimol/vec3.hpp"

namespace pimol {

/// Tabulation failure: mesh too small for the thermal width, or the
/// partial-wave sum did not converge below l_max.
class TabulationError : public std::runtime_error {
 public:
  enum class Kind { grid_too_small, not_converged, invalid_input };
  TabulationError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// (q, s) grid. q nodes are logarithmic between q_min and q_max. At each q
/// the s nodes are uniform on [0, s_cap(q)], where s_cap(q) smoothly caps the
/// nominal s_max at the geometric limit 2q.
struct PairTableGrid {
  double q_min = 0.0;
  double q_max = 0.0;
  int n_q = 0;
  int n_s = 0;
  double s_max = 0.0;

  double log_step() const;
  double q_at(int i) const;
  double s_cap(double q) const;
  /// d ln s_cap / dq
  double s_cap_log_slope(double q) const;
  double s_at(int i, int j) const { return s_cap(q_at(i)) * j / (n_s - 1); }

  bool operator==(const PairTableGrid&) const = default;
};

/// Parameters recorded alongside a table so it can be rebuilt exactly.
struct PairTableBuild {
  int squarings = 0;
  int l_max = 0;
  int l_used = 0;
  double epsilon = 0.0;
  double grid_factor = 0.0;
  double tail_tolerance = 0.0;
  double s_widths = 0.0;
  double radial_step = 0.0;
  int radial_points = 0;
  double max_leakage = 0.0;

  bool operator==(const PairTableBuild&) const = default;
};

/// Tabulated pair action u(q, s) and du/dtau(q, s) for one particle pair,
/// evaluated through a bicubic Hermite interpolant in (ln q, s/s_cap(q)).
/// Read-only after construction; evaluation is thread-safe.
class PairActionTable {
 public:
  struct Gradient {
    Vec3 r;
    Vec3 r_prime;
  };
  struct Evaluation {
    double u = 0.0;
    double du_dtau = 0.0;
    Gradient gradient;
  };

  PairActionTable(double mu, double z, double delta_tau, PairTableGrid grid, std::vector<double> u_values,
                  std::vector<double> du_values, PairTableBuild build);
  PairActionTable(const PairActionTable&) = delete;
  PairActionTable& operator=(const PairActionTable&) = delete;
  PairActionTable(PairActionTable&&) noexcept;
  PairActionTable& operator=(PairActionTable&&) noexcept;
  ~PairActionTable();

  double mu() const { return mu_; }
  double z() const { return z_; }
  double delta_tau() const { return delta_tau_; }
  const PairTableGrid& grid() const { return grid_; }
  const PairTableBuild& build() const { return build_; }
  /// Node values, row-major [i_q * n_s + j_s].
  std::span<const double> u_values() const { return u_; }
  std::span<const double> du_values() const { return du_; }

  double u(const Vec3& r, const Vec3& r_prime) const;
  double du_dtau(const Vec3& r, const Vec3& r_prime) const;
  Gradient gradient(const Vec3& r, const Vec3& r_prime) const;
  Evaluation evaluate(const Vec3& r, const Vec3& r_prime) const;

  /// Interpolated u on the (q, s) plane, with the same out-of-grid rules.
  double u_at(double q, double s) const;
  double du_at(double q, double s) const;

  /// Number of queries that left the grid since construction or reset.
  std::uint64_t out_of_grid_count() const;
  void reset_diagnostics() const;

 private:
  struct Patch;
  Patch locate(double q, double s) const;
  void build_coefficients();

  double mu_;
  double z_;
  double delta_tau_;
  PairTableGrid grid_;
  PairTableBuild build_;
  std::vector<double> u_;
  std::vector<double> du_;
  std::vector<double> u_coef_;   // 16 per cell
  std::vector<double> du_coef_;  // 16 per cell
  std::unique_ptr<std::atomic<std::uint64_t>> out_of_grid_;
};

/// Direct partial-wave matrix-squaring evaluation of u on the equal-radius
/// submanifold |r| = |r'| = q, at displacement s, for several time steps at
/// once (all share one radial mesh). Result is u[tau][q][s]. With
/// extrapolate set, each tau is also squared with one level fewer on the
/// same mesh and the first-order start error is removed by Richardson.
struct SquaringRequest {
  double mu = 1.0;
  double z = 0.0;
  std::vector<double> taus;
  std::vector<double> q;                  // ascending
  std::vector<std::vector<double>> s;     // per q
  int squarings = 6;
  int l_max = 400;
  double grid_factor = 0.5;
  double tail_tolerance = 1e-9;
  bool extrapolate = true;
  int threads = 1;
};

struct SquaringResult {
  std::vector<std::vector<std::vector<double>>> u;
  int l_used = 0;
  double radial_step = 0.0;
  int radial_points = 0;
  double max_leakage = 0.0;
};

SquaringResult partial_wave_pair_action(const SquaringRequest& request);

/// Default grid for a pair: q in [0.01, 30] thermal widths unless overridden.
PairTableGrid default_pair_grid(double mu, double delta_tau, const PairActionSettings& settings);

/// Builds the table by matrix squaring; du/dtau by central differences at
/// delta_tau (1 +- epsilon). z == 0 yields identically zero surfaces.
PairActionTable tabulate_pair_action(double mu, double z, double delta_tau, const PairActionSettings& settings,
                                     int threads = 1);

}  // namespace pimol
