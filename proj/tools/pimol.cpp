// pimol: tabulate pair actions, run simulations, analyze run directories and
// scan fixed-nuclei separations.
//
// Exit codes: 0 ok, 1 other failure, 2 configuration, 3 tabulation did not
// converge, 4 missing pair table, 5 checkpoint mismatch, 6 missing correlators.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "manifest.hpp"
#include "pimol/action.hpp"
#include "pimol/analysis.hpp"
#include "pimol/config.hpp"
#include "pimol/model.hpp"
#include "pimol/output.hpp"
#include "pimol/pair_action.hpp"
#include "pimol/pair_action_io.hpp"
#include "pimol/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace pimol::cli {
namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, not_converged = 3, missing_table = 4, checkpoint_mismatch = 5,
            missing_correlators = 6 };

/// Carries an exit code up to main().
struct ExitError : std::runtime_error {
  int code;
  ExitError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

void info(const std::string& msg) { fmt::print(stderr, "pimol: {}\n", msg); }

struct Common {
  std::string config;
  int threads = 0;  // 0: keep the config value
  std::optional<std::uint64_t> seed;
};

SystemSpec load(const Common& c) {
  SystemSpec spec = load_config(c.config);
  if (c.threads > 0) spec.sampling.threads = c.threads;
  if (c.seed) spec.sampling.rng_seed = *c.seed;
  return spec;
}

std::string version() { return PIMOL_CLI_VERSION; }

std::shared_ptr<const ActionContext> context_for(const SystemSpec& spec) {
  auto v = validate_spec(spec);
  auto tables = load_channel_tables(v, spec.pair_action.table_dir, spec.pair_action.auto_tabulate,
                                    std::max(1, spec.sampling.threads), info);
  return std::make_shared<const ActionContext>(std::move(v), std::move(tables));
}

// tabulate ----------------------------------------------------------------

int cmd_tabulate(const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Manifest m;
  m.command = "tabulate";
  m.started_utc = utc_now();
  const SystemSpec spec = load(c);
  const auto v = validate_spec(spec);
  const fs::path dir = spec.pair_action.table_dir;
  const auto written = tabulate_channels(v, dir, std::max(1, spec.sampling.threads), info);
  if (written.empty()) info("no charged pair needs a table");
  m.config_sha256 = sha256_hex(dump_config(spec));
  m.version = version();
  m.threads = spec.sampling.threads;
  m.finished_utc = utc_now();
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& p : written) m.files.push_back(p.filename());
  fs::create_directories(dir);
  write_text_file(dir / "manifest.json", manifest_json(m, dir).dump(2) + "\n");
  for (const auto& p : written) fmt::print("{}\n", p.string());
  return ok;
}

// run ---------------------------------------------------------------------

struct RunSummary {
  SimulationResult result;
  fs::path dir;
};

RunSummary run_into(const SystemSpec& spec, const fs::path& dir, bool resume, const std::string& command,
                    int stop_after_blocks = -1) {
  const auto t0 = std::chrono::steady_clock::now();
  Manifest m;
  m.command = command;
  m.started_utc = utc_now();
  const auto ctx = context_for(spec);
  fs::create_directories(dir);

  const std::string config_text = dump_config(spec);
  write_text_file(dir / "config.json", config_text);

  RunOptions opt;
  opt.threads = std::max(1, spec.sampling.threads);
  opt.checkpoint = dir / "checkpoint.cbor";
  opt.resume = resume;
  opt.stop_after_blocks = stop_after_blocks;
  int last_pct = -1;
  opt.progress = [&](int done, int all) {
    const int pct = all > 0 ? 100 * done / all : 100;
    if (pct / 10 != last_pct / 10) info(fmt::format("{}: {}/{} blocks", spec.name, done, all));
    last_pct = pct;
  };
  info(fmt::format("{}: {} chains x {} blocks, {} slices{}", spec.name, spec.sampling.n_chains, spec.sampling.n_blocks,
                   ctx->n_slices(), resume ? " (resuming)" : ""));
  auto result = run_simulation(*ctx, opt);

  const bool partial = stop_after_blocks >= 0 && stop_after_blocks < spec.sampling.n_blocks;
  m.files = {"config.json", "checkpoint.cbor"};
  if (partial)
    info(fmt::format("stopped after {} blocks; continue with --resume", stop_after_blocks));
  else
    for (auto& f : write_run_outputs(dir, result, spec.outputs.matsubara_max)) m.files.push_back(f);
  m.config_sha256 = sha256_hex(config_text);
  m.version = version();
  m.seed = spec.sampling.rng_seed;
  m.chains = spec.sampling.n_chains;
  m.threads = opt.threads;
  m.finished_utc = utc_now();
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file(dir / "manifest.json", manifest_json(m, dir).dump(2) + "\n");
  if (result.out_of_grid > 0)
    info(fmt::format("{} pair evaluations fell outside the table grid", result.out_of_grid));
  return {std::move(result), dir};
}

int cmd_run(const Common& c, const std::string& out, bool resume, int stop_after_blocks) {
  const SystemSpec spec = load(c);
  const fs::path dir = out.empty() ? fs::path("runs") / spec.name : fs::path(out);
  const auto r = run_into(spec, dir, resume, "run", stop_after_blocks);
  if (stop_after_blocks >= 0 && stop_after_blocks < spec.sampling.n_blocks) return ok;
  for (const auto& e : r.result.estimators)
    fmt::print("{:<22} {:>16.8f} +- {:.8f} [{}]\n", e.name, e.summary.mean, e.summary.error, e.unit);
  fmt::print("outputs in {}\n", dir.string());
  return ok;
}

// analyze -----------------------------------------------------------------

ordered_json ve(const ValueError& v, const std::string& unit) {
  return {{"value", v.value}, {"error", v.error}, {"unit", unit}};
}

std::optional<CorrelationAccumulator> read_blocks(const fs::path& dir, const std::string& name) {
  const auto p = dir / "correlators" / (name + ".blocks");
  if (!fs::exists(p)) return std::nullopt;
  return read_correlator_blocks(p);
}

int cmd_analyze(const std::string& run_dir, std::vector<std::string> properties, int n_fit) {
  const fs::path dir = run_dir;
  if (!fs::exists(dir / "config.json"))
    throw ExitError(missing_correlators, "no run outputs in " + dir.string() + " (config.json missing)");
  const SystemSpec spec = load_config(dir / "config.json");
  const auto v = validate_spec(spec);
  ordered_json summary = ordered_json::object();
  if (std::ifstream in(dir / "summary.json"); in) summary = ordered_json::parse(in);

  const bool explicit_request = !properties.empty();
  if (!explicit_request) properties = {"frequency", "bond_length", "polarizability"};
  const auto sep = read_blocks(dir, "separation");
  const auto dx = read_blocks(dir, "dipole_x");
  const auto dy = read_blocks(dir, "dipole_y");
  const auto dz = read_blocks(dir, "dipole_z");

  ordered_json report;
  report["run"] = spec.name;
  report["beta"] = spec.beta;
  std::vector<std::string> missing;
  int produced = 0;

  auto guarded = [&](const std::string& key, const std::function<ordered_json()>& f) {
    try {
      report[key] = f();
    } catch (const AnalysisError& e) {
      report[key] = {{"error", e.what()}};
    }
    ++produced;
  };

  for (const auto& prop : properties) {
    if (prop == "frequency") {
      // separation correlator with the pair's reduced mass; a single 1-D
      // charged particle uses its x dipole with mass m/q^2
      const CorrelationAccumulator* src = nullptr;
      double mass = 0.0;
      if (sep && v.separation_pair()) {
        src = &*sep;
        const auto [a, b] = *v.separation_pair();
        mass = v.mass(a) * v.mass(b) / (v.mass(a) + v.mass(b));
      } else if (dx && v.mobile_particles().size() == 1 && v.dimensions() == 1) {
        src = &*dx;
        const int p = v.mobile_particles()[0];
        mass = v.mass(p) / (v.charge(p) * v.charge(p));
      }
      if (!src) {
        missing.push_back("frequency (needs correlators/separation.blocks)");
        continue;
      }
      guarded("frequency", [&] {
        const auto f = analyze_frequency(*src, mass, spec.outputs.matsubara_max, n_fit);
        return ordered_json{{"source", src->name()},     {"mass", mass},
                            {"sho_fit", ve(f.fit, "hartree")}, {"zero_mode", ve(f.zero_mode, "hartree")},
                            {"linewidth", ve(f.linewidth, "hartree")}, {"n_fit", f.n_fit}};
      });
    } else if (prop == "bond_length") {
      if (!sep) {
        missing.push_back("bond_length (needs correlators/separation.blocks)");
        continue;
      }
      guarded("bond_length", [&] {
        const auto b = bond_length_from_correlator(*sep);
        ordered_json j{{"correlator_half_beta", ve(b.at_half_beta, "bohr^2")},
                       {"correlator_zero", ve(b.at_zero, "bohr^2")}};
        const auto& est = summary.value("estimators", ordered_json::object());
        if (est.contains("separation")) {
          const double d = est["separation"]["mean"], de = est["separation"]["error"];
          j["estimator_mean_squared"] = ve({d * d, 2.0 * std::abs(d) * de}, "bohr^2");
        }
        if (est.contains("separation_sq"))
          j["estimator_mean_of_square"] =
              ve({est["separation_sq"]["mean"].get<double>(), est["separation_sq"]["error"].get<double>()}, "bohr^2");
        return j;
      });
    } else if (prop == "polarizability") {
      bool geometry_fixed = false;
      for (const auto& s : spec.species) geometry_fixed = geometry_fixed || s.fixed_positions.has_value();
      const bool full = dx && dy && dz;
      if (!full && !dx) {
        missing.push_back("polarizability (needs correlators/dipole_{x,y,z}.blocks)");
        continue;
      }
      if (!full && v.dimensions() != 1) {
        missing.push_back("polarizability (needs all of dipole_x, dipole_y, dipole_z)");
        continue;
      }
      guarded("polarizability", [&] {
        ordered_json j;
        if (full) {
          const auto mode = geometry_fixed ? GeometryMode::fixed_axis : GeometryMode::isotropic;
          const auto p = static_polarizability_from_correlator(&*dx, &*dy, &*dz, mode, geometry_fixed);
          j["mode"] = geometry_fixed ? "fixed_axis" : "isotropic";
          if (geometry_fixed) {
            j["perpendicular"] = ve(p.perp, "bohr^3");
            j["parallel"] = ve(p.para, "bohr^3");
          }
          j["mean"] = ve(p.mean, "bohr^3");
        } else {
          j["xx"] = ve(polarizability_component(*dx), "bohr^3");
        }
        // finite-field estimate <P_m> / E_m where a field component is set
        const auto& est = summary.value("estimators", ordered_json::object());
        for (int k = 0; k < 3; ++k) {
          const std::string col = std::string("polarization_") + "xyz"[k];
          if (spec.electric_field[k] == 0.0 || !est.contains(col)) continue;
          const double e = spec.electric_field[k];
          j["finite_field"][std::string(1, "xyz"[k])] =
              ve({est[col]["mean"].get<double>() / e, est[col]["error"].get<double>() / std::abs(e)}, "bohr^3");
        }
        return j;
      });
    } else {
      throw ExitError(config_error, "unknown property '" + prop + "' (frequency, bond_length, polarizability)");
    }
  }

  for (const auto& m : missing) info("missing: " + m);
  if (produced == 0 || (explicit_request && !missing.empty()))
    throw ExitError(missing_correlators, "required correlators are missing in " + dir.string());

  const std::string text = report.dump(2) + "\n";
  write_text_file(dir / "analysis.json", text);
  fmt::print("{}", text);
  return ok;
}

// scan --------------------------------------------------------------------

int cmd_scan(const Common& c, std::vector<double> separations, const std::string& out) {
  SystemSpec base = load(c);
  auto& est = base.outputs.estimators;
  std::string energy = "energy_virial";
  if (std::find(est.begin(), est.end(), energy) == est.end()) {
    if (std::find(est.begin(), est.end(), "energy_thermodynamic") != est.end())
      energy = "energy_thermodynamic";
    else
      est.push_back(energy);
  }
  const fs::path dir = out.empty() ? fs::path("runs") / (base.name + "_scan") : fs::path(out);
  try {
    with_fixed_separation(base, 1.0);
  } catch (const AnalysisError& e) {
    throw ExitError(config_error, e.what());
  }
  for (double d : separations)
    if (!(d > 0.0)) throw ExitError(config_error, "separations must be positive");
  const auto points = scan_bo_surface(
      base, std::move(separations),
      [&](const SystemSpec& s) {
        double sep = 0.0;
        for (const auto& sp : s.species)
          if (sp.fixed_positions) sep = (*sp.fixed_positions)[1][2] - (*sp.fixed_positions)[0][2];
        const auto r = run_into(s, dir / fmt::format("D_{:.4f}", sep), false, "scan");
        const auto* t = r.result.estimator(energy);
        return ValueError{t->summary.mean, t->summary.error};
      },
      [](const std::string& w) { info("warning: " + w); });

  std::ostringstream table;
  table << "# Born-Oppenheimer scan of " << base.name << ", estimator " << energy << "\n";
  table << "# separation [bohr]  energy [Ha]  error [Ha]\n";
  for (const auto& p : points) table << fmt::format("{:.6f} {:.10f} {:.10f}\n", p.separation, p.energy.value, p.energy.error);
  fs::create_directories(dir);
  write_text_file(dir / "bo_curve.dat", table.str());
  fmt::print("{}", table.str());
  return ok;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ExitError(config_error, "bad separation '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace
}  // namespace pimol::cli

int main(int argc, char** argv) {
  using namespace pimol;
  using namespace pimol::cli;

  CLI::App app{"path-integral Monte Carlo for small Coulomb systems"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--config", common.config, "JSON configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--threads", common.threads, "worker threads (overrides sampling.threads)")->check(CLI::PositiveNumber);
    if (with_seed) sub->add_option("--seed-override", seed, "replace sampling.rng_seed");
  };

  auto* tab = app.add_subcommand("tabulate", "write pair-action tables for every charged pair");
  add_common(tab, false);

  std::string out;
  bool resume = false;
  auto* run = app.add_subcommand("run", "run the simulation and write traces, correlators and spectra");
  add_common(run, true);
  run->add_option("--out", out, "run directory (default runs/<name>)");
  run->add_flag("--resume", resume, "continue from <out>/checkpoint.cbor");
  int stop_after = -1;
  run->add_option("--stop-after-blocks", stop_after, "checkpoint and stop after this many blocks per chain");

  std::string run_dir;
  std::vector<std::string> properties;
  int n_fit = -1;
  auto* ana = app.add_subcommand("analyze", "frequencies, bond lengths and polarizabilities of a run directory");
  ana->add_option("run_dir", run_dir, "run directory")->required();
  ana->add_option("--property", properties, "frequency, bond_length, polarizability (default: all available)");
  ana->add_option("--n-fit", n_fit, "highest Matsubara index in the SHO fit (default: w_n <= 3 w)");

  std::string separations;
  auto* scan = app.add_subcommand("scan", "fixed-nuclei energy at each separation");
  add_common(scan, true);
  scan->add_option("--separations", separations, "comma-separated separations in bohr")->required();
  scan->add_option("--out", out, "scan directory (default runs/<name>_scan)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : config_error;
  }
  if (run->parsed() && run->count("--seed-override")) common.seed = seed;
  if (scan->parsed() && scan->count("--seed-override")) common.seed = seed;

  try {
    if (tab->parsed()) return cmd_tabulate(common);
    if (run->parsed()) return cmd_run(common, out, resume, stop_after);
    if (ana->parsed()) return cmd_analyze(run_dir, properties, n_fit);
    if (scan->parsed()) return cmd_scan(common, parse_list(separations), out);
  } catch (const ExitError& e) {
    info(e.what());
    return e.code;
  } catch (const SpecError& e) {
    info("configuration error:");
    for (const auto& i : e.issues()) fmt::print(stderr, "  {}: {}\n", i.field, i.message);
    return config_error;
  } catch (const TabulationError& e) {
    info(e.what());
    return e.kind() == TabulationError::Kind::not_converged ? not_converged : config_error;
  } catch (const MissingTableError& e) {
    info(e.what());
    return missing_table;
  } catch (const CheckpointMismatch& e) {
    info(e.what());
    return checkpoint_mismatch;
  } catch (const std::exception& e) {
    info(std::string("error: ") + e.what());
    return failure;
  }
  return failure;
}
