#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimol/vec3.hpp"

namespace pimol {

class RandomStream;

struct SpeciesSpec {
  std::string name;
  double mass = 1.0;    // electron masses
  double charge = 0.0;  // elementary charges, electron = -1
  int count = 1;
  /// When present every particle of the species is pinned here on all slices.
  std::optional<std::vector<Vec3>> fixed_positions;
  /// Optional classical starting points for mobile particles.
  std::optional<std::vector<Vec3>> start_positions;
  /// External confinement 1/2 m w^2 |r|^2 over the active dimensions; 0 disables it.
  double harmonic_omega = 0.0;

  bool operator==(const SpeciesSpec&) const = default;
};

struct SamplerSettings {
  int bisection_levels = 3;
  int sweeps_per_block = 100;
  int n_blocks = 20;
  int n_chains = 1;
  std::uint64_t rng_seed = 1;
  double displace_move_probability = 0.1;
  double displace_step = 0.5;  // bohr, half-width of the uniform proposal cube
  double equilibration_fraction = 0.2;
  int threads = 1;

  bool operator==(const SamplerSettings&) const = default;
};

struct PairActionSettings {
  int q_points = 512;
  int s_points = 64;
  double q_min = 0.0;  // 0 selects 0.01 thermal widths
  double q_max = 0.0;  // 0 selects 30 thermal widths
  double s_widths = 6.0;
  int squarings = 7;
  int l_max = 400;
  double epsilon = 0.05;
  double grid_factor = 0.5;
  double tail_tolerance = 1e-9;
  std::string table_dir = "tables";
  bool auto_tabulate = true;

  bool operator==(const PairActionSettings&) const = default;
};

struct OutputSettings {
  std::vector<std::string> estimators;
  std::vector<std::string> correlators;
  std::optional<std::array<int, 2>> separation_pair;
  int correlator_bins = 4096;
  int matsubara_max = 64;

  bool operator==(const OutputSettings&) const = default;
};

struct SystemSpec {
  std::string name = "system";
  std::vector<SpeciesSpec> species;
  double beta = 1.0;        // 1/Ha
  double delta_tau = 0.1;   // 1/Ha
  int dimensions = 3;
  Vec3 electric_field{};    // a.u.
  /// Hard spherical wall about the origin for mobile particles; 0 = none.
  double confinement_radius = 0.0;  // bohr
  SamplerSettings sampling;
  PairActionSettings pair_action;
  OutputSettings outputs;

  bool operator==(const SystemSpec&) const = default;
};

/// A validation failure, carrying every problem found with its field path.
class SpecError : public std::runtime_error {
 public:
  struct Issue {
    std::string field;
    std::string message;
  };

  explicit SpecError(std::vector<Issue> issues);
  const std::vector<Issue>& issues() const { return issues_; }

 private:
  std::vector<Issue> issues_;
};

enum class PairKind {
  tabulated,  // at least one member moves: needs a pair-action table
  fixed,      // both pinned: constant Coulomb energy z/|r|
};

/// One unordered species pair with non-zero charge product.
struct PairChannel {
  int species_a = 0;
  int species_b = 0;
  double z = 0.0;   // charge product
  double mu = 0.0;  // effective mass of the relative coordinate
  PairKind kind = PairKind::tabulated;
  std::string label;
};

/// A SystemSpec that passed validation, with derived per-particle data.
class ValidatedSpec {
 public:
  const SystemSpec& spec() const { return spec_; }
  int n_slices() const { return n_slices_; }
  int n_particles() const { return static_cast<int>(species_of_.size()); }
  int dimensions() const { return spec_.dimensions; }
  double beta() const { return spec_.beta; }
  double delta_tau() const { return spec_.delta_tau; }

  int species_of(int particle) const { return species_of_[particle]; }
  const std::vector<int>& species_of_particle() const { return species_of_; }
  double mass(int particle) const { return spec_.species[species_of_[particle]].mass; }
  double charge(int particle) const { return spec_.species[species_of_[particle]].charge; }
  double harmonic_omega(int particle) const { return spec_.species[species_of_[particle]].harmonic_omega; }
  bool is_fixed(int particle) const { return fixed_[particle]; }
  std::span<const int> mobile_particles() const { return mobile_; }

  /// Reduced mass m_a m_b / (m_a + m_b) of a species pair.
  double reduced_mass(int species_a, int species_b) const;
  const std::vector<PairChannel>& pair_channels() const { return channels_; }
  /// Index into pair_channels(), or -1 when the pair has zero charge product.
  int channel_index(int species_a, int species_b) const;

  /// Particle pair used by separation estimators/correlators, if any.
  std::optional<std::array<int, 2>> separation_pair() const { return separation_pair_; }

 private:
  friend ValidatedSpec validate_spec(SystemSpec spec);

  SystemSpec spec_;
  int n_slices_ = 0;
  std::vector<int> species_of_;
  std::vector<char> fixed_;
  std::vector<int> mobile_;
  std::vector<PairChannel> channels_;
  std::vector<int> channel_lookup_;  // n_species x n_species
  std::optional<std::array<int, 2>> separation_pair_;
};

/// Checks every invariant; throws SpecError listing all failing fields.
ValidatedSpec validate_spec(SystemSpec spec);

/// Closed discretized paths of all particles; slice indices are cyclic.
class PathConfiguration {
 public:
  PathConfiguration() = default;
  PathConfiguration(int n_slices, std::vector<int> species_of_particle);

  int n_slices() const { return n_slices_; }
  int n_particles() const { return static_cast<int>(species_of_.size()); }
  const std::vector<int>& species_of_particle() const { return species_of_; }

  int wrap(int slice) const {
    slice %= n_slices_;
    return slice < 0 ? slice + n_slices_ : slice;
  }

  Vec3& bead(int particle, int slice) { return beads_[static_cast<std::size_t>(particle) * n_slices_ + wrap(slice)]; }
  const Vec3& bead(int particle, int slice) const {
    return beads_[static_cast<std::size_t>(particle) * n_slices_ + wrap(slice)];
  }

  std::span<Vec3> path(int particle) {
    return {beads_.data() + static_cast<std::size_t>(particle) * n_slices_, static_cast<std::size_t>(n_slices_)};
  }
  std::span<const Vec3> path(int particle) const {
    return {beads_.data() + static_cast<std::size_t>(particle) * n_slices_, static_cast<std::size_t>(n_slices_)};
  }

  std::span<const Vec3> beads() const { return beads_; }
  std::span<Vec3> beads() { return beads_; }

  /// Path-averaged position of one particle.
  Vec3 centroid(int particle) const;

  bool operator==(const PathConfiguration&) const = default;

 private:
  int n_slices_ = 0;
  std::vector<int> species_of_;
  std::vector<Vec3> beads_;
};

/// Classical starting configuration: every particle collapsed to one point.
PathConfiguration build_initial_configuration(const ValidatedSpec& spec, RandomStream& rng);

/// Temperature in kelvin corresponding to the spec's beta.
double temperature_of(const ValidatedSpec& spec);

}  // namespace pimol
