#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "pimol/model.hpp"
#include "pimol/pair_action.hpp"

namespace pimol {

/// A charged pair of particles and the table that couples them.
struct PairTerm {
  int a = 0;
  int b = 0;
  int channel = 0;
  double z = 0.0;
  const PairActionTable* table = nullptr;  // null when both members are fixed
};

/// Thrown when a charged channel has no table, or a table does not fit.
class MissingTableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// New coordinates for some particles over a cyclic slice range.
/// beads[i * count + k] replaces particle particles[i] at slice first + k.
struct Proposal {
  std::vector<int> particles;
  int first = 0;
  int count = 0;
  std::vector<Vec3> beads;
};

struct ActionDelta {
  double kinetic = 0.0;
  double potential = 0.0;  // pair + external terms
  double total() const { return kinetic + potential; }
};

/// Everything needed to evaluate the discretized action of one system.
/// Immutable after construction and shared read-only between chains.
class ActionContext {
 public:
  /// tables[c] backs pair_channels()[c]; entries of fixed channels may be null.
  ActionContext(ValidatedSpec spec, std::vector<std::shared_ptr<const PairActionTable>> tables);

  const ValidatedSpec& spec() const { return spec_; }
  double delta_tau() const { return dt_; }
  int n_slices() const { return spec_.n_slices(); }
  int n_particles() const { return spec_.n_particles(); }
  int dimensions() const { return spec_.dimensions(); }
  double mass(int p) const { return mass_[p]; }
  double charge(int p) const { return charge_[p]; }
  /// hbar^2 / 2m
  double lambda(int p) const { return 0.5 / mass_[p]; }
  bool is_mobile(int p) const { return !spec_.is_fixed(p); }
  const Vec3& field() const { return field_; }

  const std::vector<PairTerm>& pairs() const { return pairs_; }
  /// Indices into pairs() that involve the particle.
  std::span<const int> pairs_of(int particle) const { return pairs_of_[particle]; }
  const PairActionTable* table(int channel) const { return tables_[channel].get(); }

  /// m |b - a|^2 / (2 dt)
  double kinetic_link_action(const Vec3& a, const Vec3& b, int particle) const;
  /// -dt q E.r
  double field_link_action(const Vec3& bead, int particle) const;
  /// Smooth one-body potential: 1/2 m w^2 r^2 - q E.r (Ha).
  double external_potential(const Vec3& bead, int particle) const;
  Vec3 external_gradient(const Vec3& bead, int particle) const;

  /// Action of link (slice - 1, slice): kinetic and external terms of the
  /// given particles plus every pair with at least one member among them.
  double link_action(const PathConfiguration& config, int slice, std::span<const int> particles) const;
  double total_action(const PathConfiguration& config) const;

  /// U(new) - U(old), touching only the links and pairs the proposal affects.
  ActionDelta action_difference(const PathConfiguration& config, const Proposal& proposal) const;

 private:
  ValidatedSpec spec_;
  double dt_;
  Vec3 field_;
  double wall2_ = 0.0;
  std::vector<double> mass_, charge_, omega_;
  std::vector<std::shared_ptr<const PairActionTable>> tables_;
  std::vector<PairTerm> pairs_;
  std::vector<std::vector<int>> pairs_of_;
};

/// Action of one pair over link (r_prev, r_next) given relative coordinates.
double pair_link_action(const PairTerm& term, double delta_tau, const Vec3& rel_prev, const Vec3& rel_next);

}  // namespace pimol
