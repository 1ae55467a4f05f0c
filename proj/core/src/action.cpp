#include "pimol/action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pimol {

double pair_link_action(const PairTerm& term, double delta_tau, const Vec3& rel_prev, const Vec3& rel_next) {
  if (term.table) return term.table->u(rel_prev, rel_next);
  // Both members pinned: rel_prev == rel_next.
  return delta_tau * term.z / norm(rel_prev);
}

ActionContext::ActionContext(ValidatedSpec spec, std::vector<std::shared_ptr<const PairActionTable>> tables)
    : spec_(std::move(spec)), dt_(spec_.delta_tau()), field_(spec_.spec().electric_field), tables_(std::move(tables)) {
  const int n = spec_.n_particles();
  const auto& channels = spec_.pair_channels();
  if (tables_.size() != channels.size())
    throw MissingTableError("expected " + std::to_string(channels.size()) + " pair tables, got " +
                            std::to_string(tables_.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    if (ch.kind == PairKind::fixed) continue;
    const auto& t = tables_[c];
    if (!t) throw MissingTableError("no pair-action table for " + ch.label);
    auto near = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); };
    if (!near(t->delta_tau(), dt_) || !near(t->mu(), ch.mu) || !near(t->z(), ch.z))
      throw MissingTableError("pair-action table for " + ch.label + " was built for different mu, z or delta_tau");
  }

  mass_.resize(n);
  charge_.resize(n);
  omega_.resize(n);
  const double wall = spec_.spec().confinement_radius;
  wall2_ = wall * wall;
  for (int p = 0; p < n; ++p) {
    mass_[p] = spec_.mass(p);
    charge_[p] = spec_.charge(p);
    omega_[p] = spec_.harmonic_omega(p);
  }

  pairs_of_.resize(n);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int c = spec_.channel_index(spec_.species_of(a), spec_.species_of(b));
      if (c < 0) continue;
      PairTerm t;
      t.a = a;
      t.b = b;
      t.channel = c;
      t.z = channels[c].z;
      t.table = channels[c].kind == PairKind::fixed ? nullptr : tables_[c].get();
      pairs_of_[a].push_back(static_cast<int>(pairs_.size()));
      pairs_of_[b].push_back(static_cast<int>(pairs_.size()));
      pairs_.push_back(t);
    }
  }
}

double ActionContext::kinetic_link_action(const Vec3& a, const Vec3& b, int particle) const {
  return mass_[particle] * norm2(b - a) / (2.0 * dt_);
}

double ActionContext::field_link_action(const Vec3& bead, int particle) const {
  return -dt_ * charge_[particle] * dot(field_, bead);
}

double ActionContext::external_potential(const Vec3& bead, int particle) const {
  // Outside the wall the weight is zero, so any move that crosses it is rejected.
  if (wall2_ > 0.0 && is_mobile(particle) && norm2(bead) > wall2_) return std::numeric_limits<double>::infinity();
  double v = -charge_[particle] * dot(field_, bead);
  if (omega_[particle] > 0.0) v += 0.5 * mass_[particle] * omega_[particle] * omega_[particle] * norm2(bead);
  return v;
}

Vec3 ActionContext::external_gradient(const Vec3& bead, int particle) const {
  Vec3 g = field_ * (-charge_[particle]);
  if (omega_[particle] > 0.0) g += bead * (mass_[particle] * omega_[particle] * omega_[particle]);
  return g;
}

double ActionContext::link_action(const PathConfiguration& config, int slice, std::span<const int> particles) const {
  const int prev = slice - 1;
  double total = 0.0;
  std::vector<char> in_set(n_particles(), 0);
  for (int p : particles) in_set[p] = 1;
  for (int p : particles) {
    const Vec3& r0 = config.bead(p, prev);
    const Vec3& r1 = config.bead(p, slice);
    if (is_mobile(p)) total += kinetic_link_action(r0, r1, p);
    total += 0.5 * dt_ * (external_potential(r0, p) + external_potential(r1, p));
  }
  for (const auto& t : pairs_) {
    if (!in_set[t.a] && !in_set[t.b]) continue;
    total += pair_link_action(t, dt_, config.bead(t.a, prev) - config.bead(t.b, prev),
                              config.bead(t.a, slice) - config.bead(t.b, slice));
  }
  return total;
}

double ActionContext::total_action(const PathConfiguration& config) const {
  std::vector<int> all(n_particles());
  for (int p = 0; p < n_particles(); ++p) all[p] = p;
  double total = 0.0;
  for (int n = 0; n < n_slices(); ++n) total += link_action(config, n, all);
  return total;
}

ActionDelta ActionContext::action_difference(const PathConfiguration& config, const Proposal& proposal) const {
  const int N = n_slices();
  const int count = proposal.count;
  ActionDelta delta;
  if (count <= 0 || proposal.particles.empty()) return delta;

  std::vector<int> slot(n_particles(), -1);
  for (std::size_t i = 0; i < proposal.particles.size(); ++i) slot[proposal.particles[i]] = static_cast<int>(i);
  auto offset = [&](int slice) {
    int o = (slice - proposal.first) % N;
    return o < 0 ? o + N : o;
  };
  auto fresh = [&](int p, int slice) -> const Vec3& {
    const int i = slot[p];
    if (i >= 0) {
      const int o = offset(slice);
      if (o < count) return proposal.beads[static_cast<std::size_t>(i) * count + o];
    }
    return config.bead(p, slice);
  };

  // Links (first - 1, first) ... (first + count - 1, first + count).
  const int n_links = count >= N ? N : count + 1;
  std::vector<int> partners;
  for (const auto& t : pairs_)
    if (slot[t.a] >= 0 || slot[t.b] >= 0) partners.push_back(static_cast<int>(&t - pairs_.data()));

  for (int k = 0; k < n_links; ++k) {
    const int s1 = proposal.first + k;
    const int s0 = s1 - 1;
    for (int p : proposal.particles) {
      const Vec3& o0 = config.bead(p, s0);
      const Vec3& o1 = config.bead(p, s1);
      const Vec3& n0 = fresh(p, s0);
      const Vec3& n1 = fresh(p, s1);
      if (is_mobile(p)) delta.kinetic += kinetic_link_action(n0, n1, p) - kinetic_link_action(o0, o1, p);
      delta.potential += 0.5 * dt_ *
                         (external_potential(n0, p) + external_potential(n1, p) - external_potential(o0, p) -
                          external_potential(o1, p));
    }
    for (int idx : partners) {
      const auto& t = pairs_[idx];
      const double now = pair_link_action(t, dt_, fresh(t.a, s0) - fresh(t.b, s0), fresh(t.a, s1) - fresh(t.b, s1));
      const double was =
          pair_link_action(t, dt_, config.bead(t.a, s0) - config.bead(t.b, s0), config.bead(t.a, s1) - config.bead(t.b, s1));
      delta.potential += now - was;
    }
  }
  return delta;
}

}  // namespace pimol
