#include "pimol/estimators.hpp"

#include <stdexcept>

namespace pimol {

namespace {

// Sum over links of the pair and external tau-derivatives, per slice.
double potential_derivative_sum(const ActionContext& ctx, const PathConfiguration& config) {
  const int n = config.n_slices();
  double sum = 0.0;
  for (const auto& t : ctx.pairs()) {
    const auto pa = config.path(t.a);
    const auto pb = config.path(t.b);
    if (!t.table) {
      sum += n * t.z / norm(pa[0] - pb[0]);
      continue;
    }
    Vec3 prev = pa[n - 1] - pb[n - 1];
    for (int j = 0; j < n; ++j) {
      const Vec3 cur = pa[j] - pb[j];
      sum += t.table->du_dtau(prev, cur);
      prev = cur;
    }
  }
  // Endpoint-averaged external terms sum to one value per bead.
  for (int p = 0; p < config.n_particles(); ++p)
    for (const auto& r : config.path(p)) sum += ctx.external_potential(r, p);
  return sum;
}

}  // namespace

double thermodynamic_energy(const ActionContext& ctx, const PathConfiguration& config) {
  const int n = config.n_slices();
  const double dt = ctx.delta_tau();
  const int d = ctx.dimensions();
  double kinetic = 0.0;
  for (int p = 0; p < config.n_particles(); ++p) {
    if (!ctx.is_mobile(p)) continue;
    const auto path = config.path(p);
    double spring = 0.0;
    for (int j = 0; j < n; ++j) spring += norm2(path[j] - path[(j + n - 1) % n]);
    kinetic += n * d / (2.0 * dt) - ctx.mass(p) * spring / (2.0 * dt * dt);
  }
  return (kinetic + potential_derivative_sum(ctx, config)) / n;
}

double virial_energy(const ActionContext& ctx, const PathConfiguration& config) {
  const int n = config.n_slices();
  const double dt = ctx.delta_tau();
  const double beta = n * dt;
  const int np = config.n_particles();
  int mobile = 0;
  std::vector<Vec3> centroid(np);
  for (int p = 0; p < np; ++p) {
    if (!ctx.is_mobile(p)) continue;
    ++mobile;
    centroid[p] = config.centroid(p);
  }
  auto deviation = [&](int p, int j) { return ctx.is_mobile(p) ? config.bead(p, j) - centroid[p] : Vec3{}; };

  // sum over beads of (r - centroid) . grad U
  double virial = 0.0;
  for (const auto& t : ctx.pairs()) {
    if (!t.table) continue;
    if (!ctx.is_mobile(t.a) && !ctx.is_mobile(t.b)) continue;
    const auto pa = config.path(t.a);
    const auto pb = config.path(t.b);
    Vec3 prev = pa[n - 1] - pb[n - 1];
    Vec3 dprev = deviation(t.a, n - 1) - deviation(t.b, n - 1);
    for (int j = 0; j < n; ++j) {
      const Vec3 cur = pa[j] - pb[j];
      const Vec3 dcur = deviation(t.a, j) - deviation(t.b, j);
      const auto g = t.table->gradient(prev, cur);
      virial += dot(dprev, g.r) + dot(dcur, g.r_prime);
      prev = cur;
      dprev = dcur;
    }
  }
  for (int p = 0; p < np; ++p) {
    if (!ctx.is_mobile(p)) continue;
    const auto path = config.path(p);
    for (int j = 0; j < n; ++j) virial += dt * dot(path[j] - centroid[p], ctx.external_gradient(path[j], p));
  }
  return ctx.dimensions() * mobile / (2.0 * beta) + potential_derivative_sum(ctx, config) / n + virial / (2.0 * beta);
}

Vec3 polarization(const ActionContext& ctx, const PathConfiguration& config) {
  Vec3 total{};
  for (int p = 0; p < config.n_particles(); ++p) {
    const double q = ctx.charge(p);
    if (q != 0.0) total += config.centroid(p) * q;
  }
  return total;
}

std::pair<double, double> separation_moments(const PathConfiguration& config, int a, int b) {
  const auto pa = config.path(a);
  const auto pb = config.path(b);
  double d = 0.0, d2 = 0.0;
  for (int j = 0; j < config.n_slices(); ++j) {
    const double r2 = norm2(pa[j] - pb[j]);
    d += std::sqrt(r2);
    d2 += r2;
  }
  return {d / config.n_slices(), d2 / config.n_slices()};
}

EstimatorSet::EstimatorSet(const ActionContext& ctx, const std::vector<std::string>& requested) : ctx_(&ctx) {
  for (const auto& name : requested) {
    if (name == "energy_thermodynamic") energy_t_ = true;
    else if (name == "energy_virial") energy_v_ = true;
    else if (name == "polarization") polarization_ = true;
    else if (name == "separation") separation_ = true;
    else throw std::invalid_argument("unknown estimator '" + name + "'");
  }
  if (separation_ && !ctx.spec().separation_pair())
    throw std::invalid_argument("separation estimator needs a separation pair");
  auto add = [&](const char* c, const char* u) {
    columns_.emplace_back(c);
    units_.emplace_back(u);
  };
  if (energy_t_) add("energy_thermodynamic", "hartree");
  if (energy_v_) add("energy_virial", "hartree");
  if (polarization_) {
    add("polarization_x", "e*bohr");
    add("polarization_y", "e*bohr");
    add("polarization_z", "e*bohr");
  }
  if (separation_) {
    add("separation", "bohr");
    add("separation_sq", "bohr^2");
  }
}

void EstimatorSet::evaluate(const PathConfiguration& config, std::span<double> out) const {
  if (out.size() != columns_.size()) throw std::invalid_argument("EstimatorSet::evaluate: wrong output size");
  std::size_t i = 0;
  if (energy_t_) out[i++] = thermodynamic_energy(*ctx_, config);
  if (energy_v_) out[i++] = virial_energy(*ctx_, config);
  if (polarization_) {
    const Vec3 p = polarization(*ctx_, config);
    out[i++] = p.x;
    out[i++] = p.y;
    out[i++] = p.z;
  }
  if (separation_) {
    const auto pair = *ctx_->spec().separation_pair();
    const auto [d, d2] = separation_moments(config, pair[0], pair[1]);
    out[i++] = d;
    out[i++] = d2;
  }
}

}  // namespace pimol
