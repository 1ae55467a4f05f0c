#include "pimol/pair_action_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "pimol/action.hpp"

namespace pimol {

namespace {

constexpr const char* kMagic = "PIMOL-PAIRACTION v1";

static_assert(std::endian::native == std::endian::little, "table files are little-endian");

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

void write_pair_table(const std::filesystem::path& path, const PairActionTable& table) {
  const auto& g = table.grid();
  const auto& b = table.build();
  nlohmann::ordered_json head;
  head["mu"] = table.mu();
  head["z"] = table.z();
  head["delta_tau"] = table.delta_tau();
  head["grid"] = {{"q_min", g.q_min}, {"q_max", g.q_max}, {"n_q", g.n_q}, {"n_s", g.n_s}, {"s_max", g.s_max}};
  head["build"] = {{"squarings", b.squarings},       {"l_max", b.l_max},
                   {"l_used", b.l_used},             {"epsilon", b.epsilon},
                   {"grid_factor", b.grid_factor},   {"tail_tolerance", b.tail_tolerance},
                   {"s_widths", b.s_widths},         {"radial_step", b.radial_step},
                   {"radial_points", b.radial_points}, {"max_leakage", b.max_leakage}};
  head["units"] = {{"u", "dimensionless"}, {"du_dtau", "hartree"}, {"q", "bohr"}, {"s", "bohr"}};

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TableFileError("cannot write table file " + path.string());
  out << kMagic << '\n' << head.dump() << '\n';
  auto put = [&](std::span<const double> values) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  };
  put(table.u_values());
  put(table.du_values());
  if (!out) throw TableFileError("short write on table file " + path.string());
}

PairActionTable read_pair_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TableFileError("cannot open table file " + path.string());
  std::string magic, header;
  std::getline(in, magic);
  if (magic != kMagic) throw TableFileError(path.string() + ": not a pair-action table (bad magic line)");
  std::getline(in, header);
  nlohmann::json head;
  try {
    head = nlohmann::json::parse(header);
  } catch (const std::exception& e) {
    throw TableFileError(path.string() + ": unreadable header: " + e.what());
  }
  try {
    PairTableGrid g;
    const auto& jg = head.at("grid");
    g.q_min = jg.at("q_min");
    g.q_max = jg.at("q_max");
    g.n_q = jg.at("n_q");
    g.n_s = jg.at("n_s");
    g.s_max = jg.at("s_max");
    PairTableBuild b;
    const auto& jb = head.at("build");
    b.squarings = jb.at("squarings");
    b.l_max = jb.at("l_max");
    b.l_used = jb.at("l_used");
    b.epsilon = jb.at("epsilon");
    b.grid_factor = jb.at("grid_factor");
    b.tail_tolerance = jb.at("tail_tolerance");
    b.s_widths = jb.at("s_widths");
    b.radial_step = jb.at("radial_step");
    b.radial_points = jb.at("radial_points");
    b.max_leakage = jb.at("max_leakage");
    if (g.n_q < 5 || g.n_s < 5 || g.n_q > (1 << 20) || g.n_s > (1 << 20))
      throw TableFileError(path.string() + ": implausible grid size");
    const std::size_t cells = static_cast<std::size_t>(g.n_q) * g.n_s;
    std::vector<double> u(cells), du(cells);
    in.read(reinterpret_cast<char*>(u.data()), static_cast<std::streamsize>(cells * sizeof(double)));
    in.read(reinterpret_cast<char*>(du.data()), static_cast<std::streamsize>(cells * sizeof(double)));
    if (!in) throw TableFileError(path.string() + ": truncated value arrays");
    return PairActionTable(head.at("mu"), head.at("z"), head.at("delta_tau"), g, std::move(u), std::move(du), b);
  } catch (const nlohmann::json::exception& e) {
    throw TableFileError(path.string() + ": malformed header: " + e.what());
  }
}

std::string pair_table_filename(const std::string& label, double delta_tau) {
  return fmt::format("{}_dt{}.pat", label, delta_tau);
}

bool pair_table_matches(const PairActionTable& table, double mu, double z, double delta_tau,
                        const PairActionSettings& settings) {
  const PairTableGrid want = default_pair_grid(mu, delta_tau, settings);
  const auto& g = table.grid();
  const auto& b = table.build();
  return close(table.mu(), mu) && close(table.z(), z) && close(table.delta_tau(), delta_tau) &&
         close(g.q_min, want.q_min) && close(g.q_max, want.q_max) && g.n_q == want.n_q && g.n_s == want.n_s &&
         close(g.s_max, want.s_max) && b.squarings == settings.squarings && b.l_max == settings.l_max &&
         close(b.epsilon, settings.epsilon) && close(b.grid_factor, settings.grid_factor) &&
         close(b.tail_tolerance, settings.tail_tolerance);
}

std::vector<std::filesystem::path> tabulate_channels(const ValidatedSpec& spec, const std::filesystem::path& dir,
                                                     int threads,
                                                     const std::function<void(const std::string&)>& log) {
  std::vector<std::filesystem::path> written;
  const auto& settings = spec.spec().pair_action;
  for (const auto& ch : spec.pair_channels()) {
    if (ch.kind == PairKind::fixed) continue;
    if (log) log(fmt::format("tabulating {} (mu={}, z={}, dt={})", ch.label, ch.mu, ch.z, spec.delta_tau()));
    const auto table = tabulate_pair_action(ch.mu, ch.z, spec.delta_tau(), settings, threads);
    std::filesystem::create_directories(dir);
    written.push_back(dir / pair_table_filename(ch.label, spec.delta_tau()));
    write_pair_table(written.back(), table);
  }
  return written;
}

std::vector<std::shared_ptr<const PairActionTable>> load_channel_tables(
    const ValidatedSpec& spec, const std::filesystem::path& dir, bool auto_tabulate, int threads,
    const std::function<void(const std::string&)>& log) {
  const auto& settings = spec.spec().pair_action;
  std::vector<std::shared_ptr<const PairActionTable>> tables;
  for (const auto& ch : spec.pair_channels()) {
    if (ch.kind == PairKind::fixed) {
      tables.push_back(nullptr);
      continue;
    }
    const auto path = dir / pair_table_filename(ch.label, spec.delta_tau());
    if (std::filesystem::exists(path)) {
      try {
        auto t = std::make_shared<const PairActionTable>(read_pair_table(path));
        if (pair_table_matches(*t, ch.mu, ch.z, spec.delta_tau(), settings)) {
          tables.push_back(std::move(t));
          continue;
        }
        if (log) log(path.string() + " was built with other parameters");
      } catch (const TableFileError& e) {
        if (log) log(e.what());
      }
    }
    if (!auto_tabulate) throw MissingTableError("no usable pair-action table " + path.string());
    if (log) log(fmt::format("tabulating {} (mu={}, z={}, dt={})", ch.label, ch.mu, ch.z, spec.delta_tau()));
    auto t = std::make_shared<const PairActionTable>(
        tabulate_pair_action(ch.mu, ch.z, spec.delta_tau(), settings, threads));
    std::filesystem::create_directories(dir);
    write_pair_table(path, *t);
    tables.push_back(std::move(t));
  }
  return tables;
}

}  // namespace pimol
