#include "pimol/pair_action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parallel.hpp"
#include "pimol/special_functions.hpp"
#include "pimol/units.hpp"

namespace pimol {

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

double PairTableGrid::log_step() const { return std::log(q_max / q_min) / (n_q - 1); }

double PairTableGrid::q_at(int i) const {
  if (i == n_q - 1) return q_max;
  return q_min * std::exp(i * log_step());
}

double PairTableGrid::s_cap(double q) const {
  const double t = 2.0 * q;
  return t * s_max / std::sqrt(std::sqrt(t * t * t * t + s_max * s_max * s_max * s_max));
}

double PairTableGrid::s_cap_log_slope(double q) const {
  const double t = 2.0 * q;
  const double t4 = t * t * t * t;
  return 1.0 / q - 2.0 * t * t * t / (t4 + s_max * s_max * s_max * s_max);
}

// ---------------------------------------------------------------------------
// Partial-wave matrix squaring
// ---------------------------------------------------------------------------

namespace {

constexpr double kBandWidths = 9.0;  // band half-width in thermal lengths
constexpr double kMarginWidths = 7.0;
constexpr double kLeakageLimit = 1e-6;
constexpr int kChunk = 16;

// Symmetric band matrix, full band stored row-major.
struct Band {
  int n = 0;
  int b = 0;
  std::vector<double> data;

  void reset(int n_, int b_) {
    n = n_;
    b = b_;
    data.assign(static_cast<std::size_t>(n) * (2 * b + 1), 0.0);
  }
  double* row(int a) { return data.data() + static_cast<std::size_t>(a) * (2 * b + 1) + b - a; }
  const double* row(int a) const { return data.data() + static_cast<std::size_t>(a) * (2 * b + 1) + b - a; }
  // row(a)[c] is element (a, c) for |a - c| <= b.
};

// Coulomb weight of the short-time start propagator, exact to first order
// in z. The Gaussian bridge average of 1/|x| smooths the nucleus on the
// scale of the bridge width; averaging it over the endpoints is accurate
// to second order in tau0 away from the origin. The s wave reaches the
// origin, so there the bridge average is projected onto l = 0 instead.
class StartPotential {
 public:
  StartPotential(double tau0, double mu) : sigma_(std::sqrt(tau0 / mu)), x_scale_(mu / tau0) {}

  // Mean over the bridge r -> r (both endpoints at the same point).
  double smeared(double r) const {
    if (r > 6.0 * sigma_) return 1.0 / r;
    double sum = 0.0;
    for (std::size_t i = 0; i < time_rule().nodes.size(); ++i) {
      const auto [t, w] = time_node(i);
      const double st = sigma_ * std::sqrt(t * (1.0 - t));
      sum += w * (r < 1e-12 * st ? std::sqrt(2.0 / units::pi) / st : std::erf(r / (std::sqrt(2.0) * st)) / r);
    }
    return sum;
  }

  double endpoint(double smeared_r, double smeared_rp) const { return 0.5 * (smeared_r + smeared_rp); }

  bool needs_swave(double r, double rp) const { return x_scale_ * r * rp <= kSwaveReach; }

  // l = 0 projection of the 3D bridge average, weight exp(x (cos - 1)).
  double swave(double r, double rp) const {
    const auto& rule = angle_rule();
    const double x = x_scale_ * r * rp;
    const double span = std::min(2.0 * x, 50.0);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double y = 0.5 * span * (rule.nodes[i] + 1.0);
      const double w = rule.weights[i] * std::exp(-y);
      num += w * bridge(r, rp, 1.0 - y / x);
      den += w;
    }
    return num / den;
  }

 private:
  static constexpr double kSwaveReach = 400.0;

  static const GaussLegendre& time_rule() {
    static const GaussLegendre rule = gauss_legendre(40);
    return rule;
  }
  static const GaussLegendre& angle_rule() {
    static const GaussLegendre rule = gauss_legendre(48);
    return rule;
  }
  // t = (1 - cos phi) / 2 absorbs the sqrt(t) edges of the bridge width.
  static std::pair<double, double> time_node(std::size_t i) {
    const auto& rule = time_rule();
    const double phi = 0.5 * units::pi * (rule.nodes[i] + 1.0);
    return {0.5 * (1.0 - std::cos(phi)), rule.weights[i] * 0.25 * units::pi * std::sin(phi)};
  }

  double bridge(double r, double rp, double c) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < time_rule().nodes.size(); ++i) {
      const auto [t, w] = time_node(i);
      const double st = sigma_ * std::sqrt(t * (1.0 - t));
      const double m2 = (1 - t) * (1 - t) * r * r + t * t * rp * rp + 2 * t * (1 - t) * r * rp * c;
      const double m = std::sqrt(std::max(m2, 0.0));
      double val;
      if (st <= 0.0) val = 1.0 / m;
      else if (m < 1e-12 * st) val = std::sqrt(2.0 / units::pi) / st;
      else val = std::erf(m / (std::sqrt(2.0) * st)) / m;
      sum += w * val;
    }
    return sum;
  }

  double sigma_;
  double x_scale_;
};

// One squaring chain. With extrapolation every requested tau is run at
// k and k - 1 levels on the same mesh and combined as 2 u_k - u_(k-1).
struct Variant {
  int group = 0;
  double weight = 1.0;
  int levels = 0;
  double tau = 0.0;
  double tau0 = 0.0;
  double pref0 = 0.0;  // sqrt(mu / (2 pi tau0))
  double pref = 0.0;   // sqrt(mu / (2 pi tau))
  std::vector<int> band;  // half-width in points for stages 0..levels-1
  std::vector<double> smeared;  // start potential at the mesh nodes
};

}  // namespace

SquaringResult partial_wave_pair_action(const SquaringRequest& rq) {
  using Kind = TabulationError::Kind;
  if (!(rq.mu > 0.0)) throw TabulationError(Kind::invalid_input, "pair action: mu must be positive");
  if (rq.taus.empty()) throw TabulationError(Kind::invalid_input, "pair action: no time steps requested");
  for (double t : rq.taus)
    if (!(t > 0.0)) throw TabulationError(Kind::invalid_input, "pair action: time steps must be positive");
  if (rq.q.empty() || rq.s.size() != rq.q.size())
    throw TabulationError(Kind::invalid_input, "pair action: q and s lists must be non-empty and match");
  for (std::size_t i = 0; i < rq.q.size(); ++i) {
    if (!(rq.q[i] > 0.0) || (i > 0 && !(rq.q[i] > rq.q[i - 1])))
      throw TabulationError(Kind::invalid_input, "pair action: q must be positive and ascending");
  }
  if (rq.squarings < 2) throw TabulationError(Kind::invalid_input, "pair action: at least 2 squarings needed");

  const int n_tau = static_cast<int>(rq.taus.size());
  const int n_var = rq.extrapolate ? 2 * n_tau : n_tau;
  const int n_q = static_cast<int>(rq.q.size());
  const double mu = rq.mu;
  const double z = rq.z;
  const int k = rq.squarings;

  SquaringResult result;
  result.u.resize(n_tau);
  for (auto& per_q : result.u) {
    per_q.resize(n_q);
    for (int i = 0; i < n_q; ++i) per_q[i].assign(rq.s[i].size(), 0.0);
  }
  if (z == 0.0) return result;

  // Radial mesh shared by all variants.
  const double tau_min = *std::ranges::min_element(rq.taus);
  const double tau_max = *std::ranges::max_element(rq.taus);
  const double h = rq.grid_factor * std::sqrt(std::ldexp(tau_min, -k) / mu);
  const double margin = kMarginWidths * std::sqrt(tau_max / mu);
  const bool from_origin = rq.q.front() - margin <= h;
  const double r0 = from_origin ? h : rq.q.front() - margin;
  const int n = static_cast<int>(std::floor((rq.q.back() + margin - r0) / h)) + 1;
  auto radius = [&](int a) { return r0 + a * h; };
  result.radial_step = h;
  result.radial_points = n;

  std::vector<Variant> vars(n_var);
  for (int v = 0; v < n_var; ++v) {
    auto& var = vars[v];
    var.group = v % n_tau;
    const bool coarse = v >= n_tau;
    var.levels = coarse ? k - 1 : k;
    var.weight = rq.extrapolate ? (coarse ? -1.0 : 2.0) : 1.0;
    var.tau = rq.taus[var.group];
    var.tau0 = std::ldexp(var.tau, -var.levels);
    var.pref0 = std::sqrt(mu / (2.0 * units::pi * var.tau0));
    var.pref = std::sqrt(mu / (2.0 * units::pi * var.tau));
    var.band.resize(var.levels);
    for (int j = 0; j < var.levels; ++j) {
      const double tj = std::ldexp(var.tau0, j);
      var.band[j] = std::min(n - 1, static_cast<int>(std::ceil(kBandWidths * std::sqrt(tj / mu) / h)));
    }
    const StartPotential pot(var.tau0, mu);
    var.smeared.resize(n);
    for (int a = 0; a < n; ++a) var.smeared[a] = pot.smeared(radius(a));
  }

  // Per (q, s) bookkeeping.
  std::vector<int> centre(n_q);
  for (int i = 0; i < n_q; ++i)
    centre[i] = std::clamp(static_cast<int>(std::lround((rq.q[i] - r0) / h)), 0, n - 1);
  std::vector<std::vector<double>> cos_theta(n_q), p_prev(n_q), p_cur(n_q);
  std::vector<std::vector<std::vector<double>>> boost(n_var, std::vector<std::vector<double>>(n_q));
  std::vector<std::vector<std::vector<double>>> corr(n_var, std::vector<std::vector<double>>(n_q));
  for (int i = 0; i < n_q; ++i) {
    const double q = rq.q[i];
    const auto& s = rq.s[i];
    cos_theta[i].resize(s.size());
    for (std::size_t j = 0; j < s.size(); ++j)
      cos_theta[i][j] = std::clamp(1.0 - s[j] * s[j] / (2.0 * q * q), -1.0, 1.0);
    p_prev[i].assign(s.size(), 0.0);
    p_cur[i].assign(s.size(), 1.0);
    for (int v = 0; v < n_var; ++v) {
      boost[v][i].resize(s.size());
      for (std::size_t j = 0; j < s.size(); ++j) boost[v][i][j] = std::exp(mu * s[j] * s[j] / (2.0 * vars[v].tau));
      corr[v][i].assign(s.size(), 0.0);
    }
  }
  auto u_ref = [&](int v, double q) { return vars[v].tau * z / std::sqrt(q * q + vars[v].tau / mu); };

  std::vector<int> active(n_q);
  std::iota(active.begin(), active.end(), 0);
  std::vector<double> previous_max(n_q, std::numeric_limits<double>::infinity());
  std::vector<int> chunks_done(n_q, 0);

  for (int l_lo = 0; !active.empty(); l_lo += kChunk) {
    if (l_lo > rq.l_max) {
      const double q_bad = rq.q[active.front()];
      throw TabulationError(Kind::not_converged,
                            "pair action: partial-wave sum not converged by l_max = " + std::to_string(rq.l_max) +
                                " at q = " + std::to_string(q_bad) + " bohr (" + std::to_string(active.size()) +
                                " radii outstanding)");
    }
    const int l_hi = std::min(l_lo + kChunk - 1, rq.l_max);
    const int n_l = l_hi - l_lo + 1;
    const int n_act = static_cast<int>(active.size());
    result.l_used = l_hi;

    // Initial propagators at tau0 for every l of the chunk.
    std::vector<std::vector<Band>> m0(n_var, std::vector<Band>(n_l));
    for (int v = 0; v < n_var; ++v)
      for (auto& band : m0[v]) band.reset(n, vars[v].band[0]);
    detail::parallel_for(n_var * n, rq.threads, [&](int task, int) {
      const int v = task / n;
      const int a = task % n;
      const auto& var = vars[v];
      const StartPotential pot(var.tau0, mu);
      const int b0 = var.band[0];
      std::vector<double> f(static_cast<std::size_t>(l_hi) + 1);
      const double ra = radius(a);
      for (int c = std::max(0, a - b0); c <= std::min(n - 1, a + b0); ++c) {
        const double rc = radius(c);
        scaled_bessel_i_sequence(mu * ra * rc / var.tau0, f);
        const double free = var.pref0 * std::exp(-mu * (ra - rc) * (ra - rc) / (2.0 * var.tau0));
        const double base = free * std::exp(-var.tau0 * z * pot.endpoint(var.smeared[a], var.smeared[c]));
        for (int li = 0; li < n_l; ++li) m0[v][li].row(a)[c] = base * f[l_lo + li];
        if (l_lo == 0 && pot.needs_swave(ra, rc))
          m0[v][0].row(a)[c] = free * std::exp(-var.tau0 * z * pot.swave(ra, rc)) * f[0];
      }
    });

    // Start vectors rho(q, r; tau0) and the free diagonal rho0(q, q; tau).
    std::vector<std::vector<std::vector<double>>> start(n_var, std::vector<std::vector<double>>(n_act));
    std::vector<std::vector<std::vector<double>>> free_diag(n_var, std::vector<std::vector<double>>(n_act));
    detail::parallel_for(n_var * n_act, rq.threads, [&](int task, int) {
      const int v = task / n_act;
      const int ai = task % n_act;
      const int iq = active[ai];
      const auto& var = vars[v];
      const StartPotential pot(var.tau0, mu);
      const double q = rq.q[iq];
      const double smeared_q = pot.smeared(q);
      const int b0 = var.band[0];
      const int c = centre[iq];
      std::vector<double> f(static_cast<std::size_t>(l_hi) + 1);
      auto& out = start[v][ai];
      out.assign(static_cast<std::size_t>(2 * b0 + 1) * n_l, 0.0);
      for (int a = std::max(0, c - b0); a <= std::min(n - 1, c + b0); ++a) {
        const double ra = radius(a);
        scaled_bessel_i_sequence(mu * q * ra / var.tau0, f);
        const double free = var.pref0 * std::exp(-mu * (q - ra) * (q - ra) / (2.0 * var.tau0));
        const double base = free * std::exp(-var.tau0 * z * pot.endpoint(smeared_q, var.smeared[a]));
        const std::size_t at = static_cast<std::size_t>(a - c + b0) * n_l;
        for (int li = 0; li < n_l; ++li) out[at + li] = base * f[l_lo + li];
        if (l_lo == 0 && pot.needs_swave(q, ra)) out[at] = free * std::exp(-var.tau0 * z * pot.swave(q, ra)) * f[0];
      }
      scaled_bessel_i_sequence(mu * q * q / var.tau, f);
      free_diag[v][ai].assign(f.begin() + l_lo, f.end());
      for (auto& x : free_diag[v][ai]) x *= var.pref;
    });

    // Square each (l, variant) independently; d[li][v][ai] holds the
    // Coulomb-induced change of rho_l(q, q; tau) relative to exp(-u_ref).
    std::vector<std::vector<std::vector<double>>> delta(n_l, std::vector<std::vector<double>>(n_var));
    std::vector<double> leakage(static_cast<std::size_t>(n_l) * n_var, 0.0);
    detail::parallel_for(n_l * n_var, rq.threads, [&](int task, int) {
      const int li = task / n_var;
      const int v = task % n_var;
      const auto& var = vars[v];
      const auto& first = m0[v][li];

      // Rows below the centrifugal barrier carry nothing measurable.
      double peak = 0.0;
      for (double x : first.data) peak = std::max(peak, x);
      int lo = 0;
      for (; lo < n; ++lo) {
        const double* row = first.row(lo);
        double m = 0.0;
        for (int c = std::max(0, lo - first.b); c <= std::min(n - 1, lo + first.b); ++c) m = std::max(m, row[c]);
        if (m > 1e-30 * peak) break;
      }

      const int levels = var.levels;
      std::vector<Band> stage(std::max(0, levels - 2));
      const Band* prev = &first;
      for (int j = 1; j <= levels - 2; ++j) {
        Band& next = stage[j - 1];
        const int bp = prev->b;
        next.reset(n, var.band[j]);
        for (int a = lo; a < n; ++a) {
          const double* pa = prev->row(a);
          double* out_a = next.row(a);
          for (int b = a; b <= std::min(n - 1, a + next.b); ++b) {
            if (b - a > 2 * bp) break;
            const int c0 = std::max(lo, b - bp);
            const int c1 = std::min(n - 1, a + bp);
            const double* pb = prev->row(b);
            double sum = 0.0;
            for (int c = c0; c <= c1; ++c) sum += pa[c] * pb[c];
            out_a[b] = h * sum;
            next.row(b)[a] = h * sum;
          }
        }
        prev = &next;
      }

      auto& out = delta[li][v];
      out.assign(n_act, 0.0);
      double worst = 0.0;
      std::vector<double> cur, nxt;
      for (int ai = 0; ai < n_act; ++ai) {
        const int iq = active[ai];
        const int c = centre[iq];
        // v_0 over [c - b0, c + b0]
        int lo_idx = std::max(0, c - var.band[0]);
        int hi_idx = std::min(n - 1, c + var.band[0]);
        cur.assign(hi_idx - lo_idx + 1, 0.0);
        for (int a = lo_idx; a <= hi_idx; ++a)
          cur[a - lo_idx] = start[v][ai][static_cast<std::size_t>(a - c + var.band[0]) * n_l + li];
        for (int j = 1; j <= levels - 1; ++j) {
          const Band& m = (j == 1) ? first : stage[j - 2];
          const int nlo = std::max(lo, c - var.band[j]);
          const int nhi = std::min(n - 1, c + var.band[j]);
          nxt.assign(std::max(0, nhi - nlo + 1), 0.0);
          for (int b = nlo; b <= nhi; ++b) {
            const int a0 = std::max(lo_idx, b - m.b);
            const int a1 = std::min(hi_idx, b + m.b);
            const double* mb = m.row(b);
            double sum = 0.0;
            for (int a = a0; a <= a1; ++a) sum += cur[a - lo_idx] * mb[a];
            nxt[b - nlo] = h * sum;
          }
          cur.swap(nxt);
          lo_idx = nlo;
          hi_idx = nhi;
        }
        double total = 0.0;
        double edge = 0.0;
        const double edge_width = std::sqrt(var.tau / (2.0 * mu));
        for (int b = lo_idx; b <= hi_idx; ++b) {
          const double w2 = cur[b - lo_idx] * cur[b - lo_idx];
          total += w2;
          const double rb = radius(b);
          const bool near_top = rb > radius(n - 1) - edge_width;
          const bool near_bottom = !from_origin && rb < r0 + edge_width;
          if (near_top || near_bottom) edge += w2;
        }
        if (total > 0.0) worst = std::max(worst, edge / total);
        const double rho = h * total;
        out[ai] = rho * std::exp(u_ref(v, rq.q[iq])) - free_diag[v][ai][li];
      }
      leakage[static_cast<std::size_t>(li) * n_var + v] = worst;
    });

    for (double leak : leakage) result.max_leakage = std::max(result.max_leakage, leak);
    if (result.max_leakage > kLeakageLimit)
      throw TabulationError(Kind::grid_too_small,
                            "pair action: probability leakage " + std::to_string(result.max_leakage) +
                                " at the radial mesh boundary exceeds 1e-6");

    // Accumulate in fixed l order.
    std::vector<double> chunk_max(n_act, 0.0);
    for (int li = 0; li < n_l; ++li) {
      const int l = l_lo + li;
      for (int ai = 0; ai < n_act; ++ai) {
        const int iq = active[ai];
        const double q = rq.q[iq];
        const auto& ct = cos_theta[iq];
        for (int v = 0; v < n_var; ++v) {
          const double x = mu * q * q / vars[v].tau;
          const double coef = (2.0 * l + 1.0) * delta[li][v][ai] / (vars[v].pref * 2.0 * x);
          auto& cv = corr[v][iq];
          const auto& bv = boost[v][iq];
          for (std::size_t j = 0; j < ct.size(); ++j) {
            cv[j] += coef * p_cur[iq][j] * bv[j];
            chunk_max[ai] = std::max(chunk_max[ai], std::abs(coef) * bv[j]);
          }
        }
        for (std::size_t j = 0; j < ct.size(); ++j) {
          const double next = ((2.0 * l + 1.0) * ct[j] * p_cur[iq][j] - l * p_prev[iq][j]) / (l + 1.0);
          p_prev[iq][j] = p_cur[iq][j];
          p_cur[iq][j] = next;
        }
      }
    }

    std::vector<int> still;
    for (int ai = 0; ai < n_act; ++ai) {
      const int iq = active[ai];
      ++chunks_done[iq];
      double scale = std::numeric_limits<double>::infinity();
      for (int v = 0; v < n_var; ++v)
        for (double c : corr[v][iq]) scale = std::min(scale, std::abs(1.0 + c));
      const bool small = chunk_max[ai] < rq.tail_tolerance * std::min(1.0, scale);
      const bool decaying = chunk_max[ai] <= previous_max[iq];
      previous_max[iq] = chunk_max[ai];
      if (!(small && decaying && chunks_done[iq] >= 2)) still.push_back(iq);
    }
    active.swap(still);
  }

  for (int v = 0; v < n_var; ++v) {
    for (int i = 0; i < n_q; ++i) {
      const double ref = u_ref(v, rq.q[i]);
      for (std::size_t j = 0; j < rq.s[i].size(); ++j) {
        const double ratio = 1.0 + corr[v][i][j];
        if (!(ratio > 0.0))
          throw TabulationError(Kind::not_converged, "pair action: non-positive density ratio at q = " +
                                                         std::to_string(rq.q[i]) + ", s = " + std::to_string(rq.s[i][j]));
        result.u[vars[v].group][i][j] += vars[v].weight * (ref - std::log(ratio));
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Table construction
// ---------------------------------------------------------------------------

PairTableGrid default_pair_grid(double mu, double delta_tau, const PairActionSettings& settings) {
  const double width = std::sqrt(delta_tau / mu);
  PairTableGrid grid;
  grid.q_min = settings.q_min > 0.0 ? settings.q_min : 0.01 * width;
  grid.q_max = settings.q_max > 0.0 ? settings.q_max : 30.0 * width;
  grid.n_q = settings.q_points;
  grid.n_s = settings.s_points;
  grid.s_max = settings.s_widths * width;
  return grid;
}

PairActionTable tabulate_pair_action(double mu, double z, double delta_tau, const PairActionSettings& settings,
                                     int threads) {
  using Kind = TabulationError::Kind;
  if (!(mu > 0.0)) throw TabulationError(Kind::invalid_input, "tabulate: mu must be positive");
  if (!(delta_tau > 0.0)) throw TabulationError(Kind::invalid_input, "tabulate: delta_tau must be positive");
  if (settings.squarings < 6) throw TabulationError(Kind::invalid_input, "tabulate: at least 6 squarings required");
  if (settings.q_points < 4 || settings.s_points < 4)
    throw TabulationError(Kind::invalid_input, "tabulate: grid needs at least 4 points per axis");

  const PairTableGrid grid = default_pair_grid(mu, delta_tau, settings);
  if (!(grid.q_max > grid.q_min)) throw TabulationError(Kind::invalid_input, "tabulate: q_max must exceed q_min");

  PairTableBuild build;
  build.squarings = settings.squarings;
  build.l_max = settings.l_max;
  build.epsilon = settings.epsilon;
  build.grid_factor = settings.grid_factor;
  build.tail_tolerance = settings.tail_tolerance;
  build.s_widths = settings.s_widths;

  const std::size_t cells = static_cast<std::size_t>(grid.n_q) * grid.n_s;
  std::vector<double> u(cells, 0.0);
  std::vector<double> du(cells, 0.0);
  if (z == 0.0) return PairActionTable(mu, z, delta_tau, grid, std::move(u), std::move(du), build);

  SquaringRequest rq;
  rq.mu = mu;
  rq.z = z;
  rq.taus = {delta_tau * (1.0 - settings.epsilon), delta_tau, delta_tau * (1.0 + settings.epsilon)};
  rq.squarings = settings.squarings;
  rq.l_max = settings.l_max;
  rq.grid_factor = settings.grid_factor;
  rq.tail_tolerance = settings.tail_tolerance;
  rq.threads = threads;
  rq.q.resize(grid.n_q);
  rq.s.resize(grid.n_q);
  for (int i = 0; i < grid.n_q; ++i) {
    rq.q[i] = grid.q_at(i);
    rq.s[i].resize(grid.n_s);
    for (int j = 0; j < grid.n_s; ++j) rq.s[i][j] = grid.s_at(i, j);
  }
  const SquaringResult res = partial_wave_pair_action(rq);
  build.l_used = res.l_used;
  build.radial_step = res.radial_step;
  build.radial_points = res.radial_points;
  build.max_leakage = res.max_leakage;

  const double inv = 1.0 / (2.0 * settings.epsilon * delta_tau);
  for (int i = 0; i < grid.n_q; ++i) {
    for (int j = 0; j < grid.n_s; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * grid.n_s + j;
      u[idx] = res.u[1][i][j];
      du[idx] = (res.u[2][i][j] - res.u[0][i][j]) * inv;
    }
  }
  return PairActionTable(mu, z, delta_tau, grid, std::move(u), std::move(du), build);
}

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

namespace {

// Fourth-order first derivative along a line of values with spacing 1.
// Mirror ghosts at the low end when `even_low` (function even about index 0).
double derivative_at(const std::vector<double>& f, int i, bool even_low) {
  const int n = static_cast<int>(f.size());
  auto at = [&](int j) { return (even_low && j < 0) ? f[-j] : f[j]; };
  if ((i >= 2 || (even_low && i >= 0)) && i + 2 < n)
    return (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / 12.0;
  if (i == 0) return (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / 12.0;
  if (i == 1) return (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / 12.0;
  if (i == n - 1)
    return (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / 12.0;
  return (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / 12.0;
}

std::vector<double> bicubic_coefficients(const std::vector<double>& values, int nq, int ns) {
  // Derivatives in index space: along q (xi) and along s (eta, even about 0).
  auto idx = [ns](int i, int j) { return static_cast<std::size_t>(i) * ns + j; };
  std::vector<double> dq(values.size()), ds(values.size()), dqs(values.size());
  std::vector<double> line;
  for (int j = 0; j < ns; ++j) {
    line.resize(nq);
    for (int i = 0; i < nq; ++i) line[i] = values[idx(i, j)];
    for (int i = 0; i < nq; ++i) dq[idx(i, j)] = derivative_at(line, i, false);
  }
  for (int i = 0; i < nq; ++i) {
    line.assign(values.begin() + idx(i, 0), values.begin() + idx(i, 0) + ns);
    for (int j = 0; j < ns; ++j) ds[idx(i, j)] = derivative_at(line, j, true);
  }
  for (int j = 0; j < ns; ++j) {
    line.resize(nq);
    for (int i = 0; i < nq; ++i) line[i] = ds[idx(i, j)];
    for (int i = 0; i < nq; ++i) dqs[idx(i, j)] = derivative_at(line, i, false);
  }

  static constexpr double A[4][4] = {{1, 0, 0, 0}, {0, 0, 1, 0}, {-3, 3, -2, -1}, {2, -2, 1, 1}};
  std::vector<double> coef(static_cast<std::size_t>(nq - 1) * (ns - 1) * 16);
  for (int i = 0; i + 1 < nq; ++i) {
    for (int j = 0; j + 1 < ns; ++j) {
      const double F[4][4] = {
          {values[idx(i, j)], values[idx(i, j + 1)], ds[idx(i, j)], ds[idx(i, j + 1)]},
          {values[idx(i + 1, j)], values[idx(i + 1, j + 1)], ds[idx(i + 1, j)], ds[idx(i + 1, j + 1)]},
          {dq[idx(i, j)], dq[idx(i, j + 1)], dqs[idx(i, j)], dqs[idx(i, j + 1)]},
          {dq[idx(i + 1, j)], dq[idx(i + 1, j + 1)], dqs[idx(i + 1, j)], dqs[idx(i + 1, j + 1)]}};
      double tmp[4][4] = {};
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c) tmp[a][b] += A[a][c] * F[c][b];
      double* out = &coef[(static_cast<std::size_t>(i) * (ns - 1) + j) * 16];
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          double s = 0.0;
          for (int c = 0; c < 4; ++c) s += tmp[a][c] * A[b][c];
          out[a * 4 + b] = s;
        }
    }
  }
  return coef;
}

struct PatchValue {
  double f = 0.0;
  double ft = 0.0;  // d/dt (index units along q)
  double fw = 0.0;  // d/dw (index units along s)
};

PatchValue eval_patch(const double* c, double t, double w) {
  const double tp[4] = {1.0, t, t * t, t * t * t};
  const double wp[4] = {1.0, w, w * w, w * w * w};
  const double dtp[4] = {0.0, 1.0, 2.0 * t, 3.0 * t * t};
  const double dwp[4] = {0.0, 1.0, 2.0 * w, 3.0 * w * w};
  PatchValue out;
  for (int a = 0; a < 4; ++a) {
    double row = 0.0;
    double drow = 0.0;
    for (int b = 0; b < 4; ++b) {
      row += c[a * 4 + b] * wp[b];
      drow += c[a * 4 + b] * dwp[b];
    }
    out.f += tp[a] * row;
    out.ft += dtp[a] * row;
    out.fw += tp[a] * drow;
  }
  return out;
}

}  // namespace

struct PairActionTable::Patch {
  enum class Mode { inside, primitive } mode = Mode::inside;
  std::size_t cell = 0;
  double t = 0.0;
  double w = 0.0;
  double dt_dq = 0.0;  // d(index_q)/dq, zero when clamped
  double dw_dq = 0.0;  // d(index_s)/dq at fixed s
  double dw_ds = 0.0;  // d(index_s)/ds, zero when clamped
};

PairActionTable::PairActionTable(double mu, double z, double delta_tau, PairTableGrid grid, std::vector<double> u_values,
                                 std::vector<double> du_values, PairTableBuild build)
    : mu_(mu),
      z_(z),
      delta_tau_(delta_tau),
      grid_(grid),
      build_(build),
      u_(std::move(u_values)),
      du_(std::move(du_values)),
      out_of_grid_(std::make_unique<std::atomic<std::uint64_t>>(0)) {
  const std::size_t cells = static_cast<std::size_t>(grid_.n_q) * grid_.n_s;
  if (grid_.n_q < 5 || grid_.n_s < 5 || u_.size() != cells || du_.size() != cells || !(grid_.q_max > grid_.q_min) ||
      !(grid_.q_min > 0.0) || !(grid_.s_max > 0.0))
    throw std::invalid_argument("PairActionTable: inconsistent grid or value arrays");
  build_coefficients();
}

PairActionTable::PairActionTable(PairActionTable&&) noexcept = default;
PairActionTable& PairActionTable::operator=(PairActionTable&&) noexcept = default;
PairActionTable::~PairActionTable() = default;

void PairActionTable::build_coefficients() {
  u_coef_ = bicubic_coefficients(u_, grid_.n_q, grid_.n_s);
  du_coef_ = bicubic_coefficients(du_, grid_.n_q, grid_.n_s);
}

PairActionTable::Patch PairActionTable::locate(double q, double s) const {
  Patch p;
  const int nq = grid_.n_q;
  const int ns = grid_.n_s;
  if (q > grid_.q_max) {
    out_of_grid_->fetch_add(1, std::memory_order_relaxed);
    p.mode = Patch::Mode::primitive;
    return p;
  }
  bool outside = false;
  const double step = grid_.log_step();
  double xi = 0.0;
  if (q < grid_.q_min) {
    outside = true;
    q = grid_.q_min;
  } else {
    xi = std::log(q / grid_.q_min) / step;
    p.dt_dq = 1.0 / (q * step);
  }
  int i = std::min(static_cast<int>(xi), nq - 2);
  p.t = xi - i;

  const double cap = grid_.s_cap(q);
  double eta = s / cap * (ns - 1);
  if (eta > ns - 1) {
    outside = true;
    eta = ns - 1;
  } else {
    p.dw_ds = (ns - 1) / cap;
    if (p.dt_dq != 0.0) p.dw_dq = -eta * grid_.s_cap_log_slope(q);
  }
  int j = std::min(static_cast<int>(eta), ns - 2);
  p.w = eta - j;
  p.cell = (static_cast<std::size_t>(i) * (ns - 1) + j) * 16;
  if (outside) out_of_grid_->fetch_add(1, std::memory_order_relaxed);
  return p;
}

double PairActionTable::u_at(double q, double s) const {
  const Patch p = locate(q, s);
  if (p.mode == Patch::Mode::primitive) return delta_tau_ * z_ / q;
  return eval_patch(&u_coef_[p.cell], p.t, p.w).f;
}

double PairActionTable::du_at(double q, double s) const {
  const Patch p = locate(q, s);
  if (p.mode == Patch::Mode::primitive) return z_ / q;
  return eval_patch(&du_coef_[p.cell], p.t, p.w).f;
}

double PairActionTable::u(const Vec3& r, const Vec3& rp) const {
  const double a = norm(r);
  const double b = norm(rp);
  const double q = 0.5 * (a + b);
  const Patch p = locate(q, norm(r - rp));
  if (p.mode == Patch::Mode::primitive) return 0.5 * delta_tau_ * z_ * (1.0 / a + 1.0 / b);
  return eval_patch(&u_coef_[p.cell], p.t, p.w).f;
}

double PairActionTable::du_dtau(const Vec3& r, const Vec3& rp) const {
  const double a = norm(r);
  const double b = norm(rp);
  const double q = 0.5 * (a + b);
  const Patch p = locate(q, norm(r - rp));
  if (p.mode == Patch::Mode::primitive) return 0.5 * z_ * (1.0 / a + 1.0 / b);
  return eval_patch(&du_coef_[p.cell], p.t, p.w).f;
}

PairActionTable::Evaluation PairActionTable::evaluate(const Vec3& r, const Vec3& rp) const {
  Evaluation out;
  const double a = norm(r);
  const double b = norm(rp);
  const Vec3 d = r - rp;
  const double s = norm(d);
  const double q = 0.5 * (a + b);
  const Patch p = locate(q, s);
  if (p.mode == Patch::Mode::primitive) {
    out.u = 0.5 * delta_tau_ * z_ * (1.0 / a + 1.0 / b);
    out.du_dtau = 0.5 * z_ * (1.0 / a + 1.0 / b);
    out.gradient.r = r * (-0.5 * delta_tau_ * z_ / (a * a * a));
    out.gradient.r_prime = rp * (-0.5 * delta_tau_ * z_ / (b * b * b));
    return out;
  }
  const PatchValue pu = eval_patch(&u_coef_[p.cell], p.t, p.w);
  out.u = pu.f;
  out.du_dtau = eval_patch(&du_coef_[p.cell], p.t, p.w).f;
  const double u_q = pu.ft * p.dt_dq + pu.fw * p.dw_dq;
  const double u_s = pu.fw * p.dw_ds;
  const Vec3 ra = a > 0.0 ? r * (0.5 * u_q / a) : Vec3{};
  const Vec3 rb = b > 0.0 ? rp * (0.5 * u_q / b) : Vec3{};
  const Vec3 sd = s > 1e-12 * (q + 1e-300) ? d * (u_s / s) : Vec3{};
  out.gradient.r = ra + sd;
  out.gradient.r_prime = rb - sd;
  return out;
}

PairActionTable::Gradient PairActionTable::gradient(const Vec3& r, const Vec3& rp) const { return evaluate(r, rp).gradient; }

std::uint64_t PairActionTable::out_of_grid_count() const { return out_of_grid_->load(std::memory_order_relaxed); }

void PairActionTable::reset_diagnostics() const { out_of_grid_->store(0, std::memory_order_relaxed); }

}  // namespace pimol
