#include "pimol/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pimol/rng.hpp"
#include "pimol/units.hpp"

namespace pimol {

namespace {

std::string join_issues(const std::vector<SpecError::Issue>& issues) {
  std::string out = "invalid system specification:";
  for (const auto& issue : issues) out += "\n  " + issue.field + ": " + issue.message;
  return out;
}

bool is_known_estimator(const std::string& name) {
  return name == "energy_thermodynamic" || name == "energy_virial" || name == "polarization" || name == "separation";
}

bool is_known_correlator(const std::string& name) {
  return name == "separation" || name == "dipole_x" || name == "dipole_y" || name == "dipole_z";
}

}  // namespace

SpecError::SpecError(std::vector<Issue> issues) : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

double ValidatedSpec::reduced_mass(int a, int b) const {
  const double ma = spec_.species[a].mass;
  const double mb = spec_.species[b].mass;
  return ma * mb / (ma + mb);
}

int ValidatedSpec::channel_index(int a, int b) const {
  const auto n = static_cast<int>(spec_.species.size());
  return channel_lookup_[a * n + b];
}

ValidatedSpec validate_spec(SystemSpec spec) {
  std::vector<SpecError::Issue> issues;
  auto fail = [&](std::string field, std::string message) { issues.push_back({std::move(field), std::move(message)}); };

  if (spec.species.empty()) fail("species", "at least one species is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < spec.species.size(); ++i) {
    const auto& s = spec.species[i];
    const std::string path = "species[" + std::to_string(i) + "]";
    if (s.name.empty()) fail(path + ".name", "must not be empty");
    if (!names.insert(s.name).second) fail(path + ".name", "duplicate species name '" + s.name + "'");
    if (!(s.mass > 0.0)) fail(path + ".mass", "must be positive");
    if (s.count < 1) fail(path + ".count", "must be at least 1");
    if (s.fixed_positions && static_cast<int>(s.fixed_positions->size()) != s.count)
      fail(path + ".fixed_positions", "has " + std::to_string(s.fixed_positions->size()) + " entries, count is " +
                                          std::to_string(s.count));
    if (s.start_positions && static_cast<int>(s.start_positions->size()) != s.count)
      fail(path + ".start_positions", "has " + std::to_string(s.start_positions->size()) + " entries, count is " +
                                          std::to_string(s.count));
    if (s.fixed_positions && s.start_positions) fail(path + ".start_positions", "not allowed for fixed species");
    if (s.harmonic_omega < 0.0) fail(path + ".harmonic_omega", "must be non-negative");
  }

  if (!(spec.beta > 0.0)) fail("beta", "must be positive");
  if (!(spec.delta_tau > 0.0)) fail("delta_tau", "must be positive");
  long long n_slices = 0;
  if (spec.beta > 0.0 && spec.delta_tau > 0.0) {
    const double ratio = spec.beta / spec.delta_tau;
    n_slices = std::llround(ratio);
    if (std::abs(ratio - static_cast<double>(n_slices)) > 1e-9 * std::max(1.0, ratio))
      fail("delta_tau", "beta/delta_tau = " + std::to_string(ratio) + " is not an integer");
    else if (n_slices < 2)
      fail("delta_tau", "beta/delta_tau must be at least 2");
    else if (n_slices > (1ll << 30))
      fail("delta_tau", "too many slices");
  }
  if (spec.dimensions < 1 || spec.dimensions > 3) fail("dimensions", "must be 1, 2 or 3");
  if (!(spec.confinement_radius >= 0.0)) {
    fail("confinement_radius", "must be non-negative");
  } else if (spec.confinement_radius > 0.0) {
    for (std::size_t i = 0; i < spec.species.size(); ++i) {
      const auto& s = spec.species[i];
      if (!s.start_positions) continue;
      for (const auto& r : *s.start_positions)
        if (norm(r) >= spec.confinement_radius)
          fail("species[" + std::to_string(i) + "].start_positions", "lies outside the confinement radius");
    }
  }

  const auto& smp = spec.sampling;
  if (smp.bisection_levels < 1) fail("sampling.bisection_levels", "must be at least 1");
  else if (n_slices >= 2 && smp.bisection_levels < 31 && (1ll << smp.bisection_levels) >= n_slices)
    fail("sampling.bisection_levels", "2^levels must be smaller than the slice count");
  if (smp.sweeps_per_block < 1) fail("sampling.sweeps_per_block", "must be at least 1");
  if (smp.n_blocks < 2) fail("sampling.n_blocks", "at least 2 blocks are needed for error bars");
  if (smp.n_chains < 1) fail("sampling.n_chains", "must be at least 1");
  if (smp.threads < 1) fail("sampling.threads", "must be at least 1");
  if (!(smp.displace_move_probability >= 0.0 && smp.displace_move_probability <= 1.0))
    fail("sampling.displace_move_probability", "must lie in [0, 1]");
  if (!(smp.displace_step >= 0.0)) fail("sampling.displace_step", "must be non-negative");
  if (!(smp.equilibration_fraction >= 0.0 && smp.equilibration_fraction < 1.0))
    fail("sampling.equilibration_fraction", "must lie in [0, 1)");
  else if (smp.n_blocks >= 2 &&
           smp.n_blocks - static_cast<int>(std::floor(smp.equilibration_fraction * smp.n_blocks)) < 2)
    fail("sampling.equilibration_fraction", "leaves fewer than 2 production blocks");

  const auto& pa = spec.pair_action;
  if (pa.q_points < 8) fail("pair_action.q_points", "must be at least 8");
  if (pa.s_points < 8) fail("pair_action.s_points", "must be at least 8");
  if (pa.q_min < 0.0) fail("pair_action.q_min", "must be non-negative");
  if (pa.q_max < 0.0) fail("pair_action.q_max", "must be non-negative");
  if (pa.q_min > 0.0 && pa.q_max > 0.0 && pa.q_min >= pa.q_max) fail("pair_action.q_max", "must exceed q_min");
  if (pa.s_widths < 6.0) fail("pair_action.s_widths", "must cover at least 6 thermal widths");
  if (pa.squarings < 6) fail("pair_action.squarings", "must be at least 6");
  if (pa.l_max < 4) fail("pair_action.l_max", "must be at least 4");
  if (!(pa.epsilon > 0.0 && pa.epsilon < 0.5)) fail("pair_action.epsilon", "must lie in (0, 0.5)");
  if (!(pa.grid_factor > 0.0 && pa.grid_factor <= 1.0)) fail("pair_action.grid_factor", "must lie in (0, 1]");

  int n_particles = 0;
  for (const auto& s : spec.species) n_particles += std::max(0, s.count);

  const auto& out = spec.outputs;
  for (std::size_t i = 0; i < out.estimators.size(); ++i)
    if (!is_known_estimator(out.estimators[i]))
      fail("outputs.estimators[" + std::to_string(i) + "]", "unknown estimator '" + out.estimators[i] + "'");
  for (std::size_t i = 0; i < out.correlators.size(); ++i)
    if (!is_known_correlator(out.correlators[i]))
      fail("outputs.correlators[" + std::to_string(i) + "]", "unknown correlator '" + out.correlators[i] + "'");
  if (out.correlator_bins < 2) fail("outputs.correlator_bins", "must be at least 2");
  if (out.matsubara_max < 0) fail("outputs.matsubara_max", "must be non-negative");
  if (out.separation_pair) {
    const auto [a, b] = *out.separation_pair;
    if (a < 0 || b < 0 || a >= n_particles || b >= n_particles || a == b)
      fail("outputs.separation_pair", "must name two distinct particle indices");
  }

  if (!issues.empty()) throw SpecError(std::move(issues));

  ValidatedSpec v;
  v.n_slices_ = static_cast<int>(n_slices);
  const auto n_species = static_cast<int>(spec.species.size());
  for (int s = 0; s < n_species; ++s) {
    for (int k = 0; k < spec.species[s].count; ++k) {
      const int p = static_cast<int>(v.species_of_.size());
      v.species_of_.push_back(s);
      const bool fixed = spec.species[s].fixed_positions.has_value();
      v.fixed_.push_back(fixed ? 1 : 0);
      if (!fixed) v.mobile_.push_back(p);
    }
  }

  // Coulomb channels: one per unordered species pair that actually forms a
  // particle pair and has a non-zero charge product.
  v.channel_lookup_.assign(static_cast<std::size_t>(n_species) * n_species, -1);
  for (int a = 0; a < n_species; ++a) {
    for (int b = a; b < n_species; ++b) {
      const auto& sa = spec.species[a];
      const auto& sb = spec.species[b];
      const double z = sa.charge * sb.charge;
      if (z == 0.0) continue;
      if (a == b && sa.count < 2) continue;
      PairChannel ch;
      ch.species_a = a;
      ch.species_b = b;
      ch.z = z;
      ch.label = sa.name + "-" + sb.name;
      const bool fa = sa.fixed_positions.has_value();
      const bool fb = sb.fixed_positions.has_value();
      if (fa && fb) {
        ch.kind = PairKind::fixed;
        ch.mu = 0.0;
      } else if (fa) {
        ch.mu = sb.mass;
      } else if (fb) {
        ch.mu = sa.mass;
      } else {
        ch.mu = sa.mass * sb.mass / (sa.mass + sb.mass);
      }
      const int idx = static_cast<int>(v.channels_.size());
      v.channels_.push_back(ch);
      v.channel_lookup_[a * n_species + b] = idx;
      v.channel_lookup_[b * n_species + a] = idx;
    }
  }

  bool needs_coulomb_3d = false;
  for (const auto& ch : v.channels_)
    if (ch.kind == PairKind::tabulated) needs_coulomb_3d = true;
  if (needs_coulomb_3d && spec.dimensions != 3)
    throw SpecError(std::vector<SpecError::Issue>{{"dimensions", "Coulomb pairs require 3 dimensions"}});

  if (out.separation_pair) {
    v.separation_pair_ = out.separation_pair;
  } else {
    // Default: the first two particles of the heaviest species with count >= 2.
    int best = -1;
    for (int s = 0; s < n_species; ++s)
      if (spec.species[s].count >= 2 && (best < 0 || spec.species[s].mass > spec.species[best].mass)) best = s;
    if (best >= 0) {
      int first = -1;
      for (int p = 0; p < static_cast<int>(v.species_of_.size()); ++p) {
        if (v.species_of_[p] != best) continue;
        if (first < 0) {
          first = p;
        } else {
          v.separation_pair_ = std::array<int, 2>{first, p};
          break;
        }
      }
    }
  }
  const bool wants_separation =
      std::ranges::find(out.estimators, "separation") != out.estimators.end() ||
      std::ranges::find(out.correlators, "separation") != out.correlators.end();
  if (wants_separation && !v.separation_pair_)
    throw SpecError(std::vector<SpecError::Issue>{{"outputs.separation_pair", "separation requested but no particle pair could be chosen"}});

  v.spec_ = std::move(spec);
  return v;
}

PathConfiguration::PathConfiguration(int n_slices, std::vector<int> species_of_particle)
    : n_slices_(n_slices),
      species_of_(std::move(species_of_particle)),
      beads_(static_cast<std::size_t>(n_slices) * species_of_.size()) {}

Vec3 PathConfiguration::centroid(int particle) const {
  Vec3 sum{};
  for (const auto& r : path(particle)) sum += r;
  return sum * (1.0 / n_slices_);
}

PathConfiguration build_initial_configuration(const ValidatedSpec& spec, RandomStream& rng) {
  PathConfiguration config(spec.n_slices(), spec.species_of_particle());
  const auto& species = spec.spec().species;
  std::vector<int> index_in_species(species.size(), 0);
  for (int p = 0; p < spec.n_particles(); ++p) {
    const int s = spec.species_of(p);
    const int k = index_in_species[s]++;
    Vec3 point{};
    if (species[s].fixed_positions) {
      point = (*species[s].fixed_positions)[k];
    } else if (species[s].start_positions) {
      point = (*species[s].start_positions)[k];
    } else {
      for (int d = 0; d < spec.dimensions(); ++d) point[d] = rng.uniform() - 0.5;
    }
    for (auto& bead : config.path(p)) bead = point;
  }
  return config;
}

double temperature_of(const ValidatedSpec& spec) { return units::hartree_in_kelvin / spec.beta(); }

}  // namespace pimol
