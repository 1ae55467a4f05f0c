#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimol/greens.hpp"
#include "pimol/model.hpp"
#include "pimol/statistics.hpp"

namespace pimol {

/// Raised when a property cannot be extracted from the data given.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// -(1/m) / (w_n^2 + w^2), times 1/beta when with_prefactor.
double sho_matsubara_model(double omega_n, double omega, double mass, double beta, bool with_prefactor);

/// w^2 = -1 / (beta m G(0)); needs a 1/beta-convention spectrum with
/// G(0) < 0. The error is propagated from spectrum.errors[0] if present.
ValueError frequency_from_zero_mode(const MatsubaraSpectrum& spectrum, double mass);

/// Half width at half maximum of |G(i w_n)|, located by interpolating
/// 1/|G| linearly in w_n^2 (exact for a Lorentzian). The error is the
/// spread against plain linear interpolation in w_n, a grid-resolution bound.
ValueError linewidth_frequency(const MatsubaraSpectrum& spectrum);

/// Weighted least squares of G(i w_n), n = 0..n_fit, against the SHO
/// Lorentzian with w the only free parameter. n_fit < 0 selects every n
/// with w_n <= 3 w_zero_mode (at least two points).
ValueError fit_sho_frequency(const MatsubaraSpectrum& spectrum, double mass, int n_fit = -1);

struct FrequencyResult {
  ValueError fit;
  ValueError zero_mode;
  ValueError linewidth;
  int n_fit = 0;
};

/// All three estimates from one spectrum (no statistical errors).
FrequencyResult frequencies_from_spectrum(const MatsubaraSpectrum& spectrum, double mass, int n_fit = -1);

/// Frequencies from a raw separation correlator: connected part (raw minus
/// <D>^2 of the same blocks), sign flipped to the G = -<x x> convention,
/// transformed with 1/beta. Errors by delete-one jackknife over blocks.
FrequencyResult analyze_frequency(const CorrelationAccumulator& acc, double mass, int n_max = 64, int n_fit = -1);

struct BondLengthResult {
  ValueError at_half_beta;  // ~ <D>^2
  ValueError at_zero;       // = <D^2>
};

/// values[N/2] (mean of the two central bins for odd N) and values[0].
BondLengthResult bond_length_from_correlator(std::span<const double> values, std::span<const double> errors);
BondLengthResult bond_length_from_correlator(const CorrelationAccumulator& acc);

enum class GeometryMode { fixed_axis, isotropic };

struct PolarizabilityResult {
  ValueError perp;  // (xx + yy) / 2, fixed_axis only
  ValueError para;  // zz, fixed_axis only
  ValueError mean;  // trace / 3
  GeometryMode mode = GeometryMode::isotropic;
};

/// One diagonal component: integral over [0, beta] of the connected
/// correlator (no 1/beta, positive sign), with a jackknife error.
ValueError polarizability_component(const CorrelationAccumulator& acc);

/// alpha_mm = integral over [0, beta] of the connected dipole correlator
/// (no 1/beta prefactor, positive sign). Any missing component is an error.
PolarizabilityResult static_polarizability_from_correlator(const CorrelationAccumulator* x,
                                                           const CorrelationAccumulator* y,
                                                           const CorrelationAccumulator* z, GeometryMode mode,
                                                           bool geometry_fixed);

/// Normalized (2J+1) exp(-beta B J(J+1)), B in cm^-1.
std::vector<double> rotational_populations(double beta, double b_wavenumber, int j_max);

struct ScanPoint {
  double separation = 0.0;
  ValueError energy;
};

/// Copy of the template with the two pinned particles placed at (0,0,-D/2)
/// and (0,0,+D/2). The template needs exactly one fixed species of count 2.
SystemSpec with_fixed_separation(const SystemSpec& base, double separation);

/// One fixed-geometry run per distinct separation, in ascending order.
/// Duplicates are dropped and reported through `warn`.
std::vector<ScanPoint> scan_bo_surface(const SystemSpec& base, std::vector<double> separations,
                                       const std::function<ValueError(const SystemSpec&)>& run_energy,
                                       const std::function<void(const std::string&)>& warn = {});

}  // namespace pimol
