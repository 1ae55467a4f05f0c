#include "pimol/output.hpp"

#include <fmt/format.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace pimol {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw OutputError("cannot write " + tmp.string());
    out << text;
    if (!out) throw OutputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string correlator_unit(const std::string& name) {
  return parse_observable(name) == Observable::separation ? "bohr^2" : "(e bohr)^2";
}

void write_trace(const std::filesystem::path& path, const EstimatorTrace& trace) {
  std::string s = fmt::format("# block {} [{}]\n", trace.name, trace.unit);
  for (std::size_t i = 0; i < trace.blocks.size(); ++i) s += fmt::format("{} {}\n", i, num(trace.blocks[i]));
  write_text_file(path, s);
}

void write_correlator(const std::filesystem::path& path, const CorrelationAccumulator& acc) {
  const auto unit = correlator_unit(acc.name());
  const auto mean = acc.mean();
  const auto err = acc.errors();
  std::string s = fmt::format("# correlator {}\n# beta {} [1/Ha]\n# slices {}\n# bins {}\n# blocks {}\n", acc.name(),
                              num(acc.beta()), acc.n_slices(), acc.n_bins(), acc.n_blocks());
  s += fmt::format("# observable_mean {}\n", num(acc.observable_mean()));
  s += fmt::format("# tau [1/Ha] value [{0}] error [{0}]\n", unit);
  for (int k = 0; k < acc.n_bins(); ++k)
    s += fmt::format("{} {} {}\n", num(k * acc.bin_width()), num(mean[k]), num(err.empty() ? 0.0 : err[k]));
  write_text_file(path, s);
}

void write_correlator_blocks(const std::filesystem::path& path, const CorrelationAccumulator& acc) {
  std::string s = fmt::format("# correlator {}\n# beta {} [1/Ha]\n# slices {}\n# bins {}\n# blocks {}\n", acc.name(),
                              num(acc.beta()), acc.n_slices(), acc.n_bins(), acc.n_blocks());
  s += fmt::format("# per row: observable block mean, then bins 0..{} [{}]\n", acc.n_bins() - 1,
                   correlator_unit(acc.name()));
  for (int b = 0; b < acc.n_blocks(); ++b) {
    s += num(acc.observable_blocks()[b]);
    for (double v : acc.blocks()[b]) s += ' ' + num(v);
    s += '\n';
  }
  write_text_file(path, s);
}

CorrelationAccumulator read_correlator_blocks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw OutputError("cannot open " + path.string());
  std::string name;
  double beta = 0.0;
  int slices = 0, bins = 0, blocks = -1;
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "correlator") ls >> name;
      else if (key == "beta") ls >> beta;
      else if (key == "slices") ls >> slices;
      else if (key == "bins") ls >> bins;
      else if (key == "blocks") ls >> blocks;
      continue;
    }
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    rows.push_back(std::move(row));
  }
  if (name.empty() || !(beta > 0.0) || slices <= 0 || bins <= 0 || slices % bins != 0)
    throw OutputError("malformed correlator header in " + path.string());
  if (blocks >= 0 && static_cast<int>(rows.size()) != blocks)
    throw OutputError("block count mismatch in " + path.string());
  CorrelationAccumulator acc(name, slices, bins, beta);
  for (auto& r : rows) {
    if (static_cast<int>(r.size()) != bins + 1) throw OutputError("malformed block row in " + path.string());
    const double obs = r.front();
    acc.add_block(std::vector<double>(r.begin() + 1, r.end()), obs);
  }
  return acc;
}

void write_spectrum(const std::filesystem::path& path, const MatsubaraSpectrum& sp, const std::string& unit) {
  const std::string gunit = sp.with_prefactor ? unit : unit + " Ha^-1";
  std::string s = fmt::format("# beta {} [1/Ha]\n# prefactor {}\n", num(sp.beta), sp.with_prefactor ? "1/beta" : "none");
  s += fmt::format("# n omega_n [Ha] ReG [{0}] ImG [{0}] error [{0}]\n", gunit);
  for (std::size_t n = 0; n < sp.values.size(); ++n)
    s += fmt::format("{} {} {} {} {}\n", n, num(sp.omega[n]), num(sp.values[n].real()), num(sp.values[n].imag()),
                     num(n < sp.errors.size() ? sp.errors[n] : 0.0));
  write_text_file(path, s);
}

std::string summary_json(const SimulationResult& r) {
  nlohmann::ordered_json j;
  j["chains"] = r.n_chains;
  j["equilibration_blocks_per_chain"] = r.equilibration_blocks;
  j["production_blocks_per_chain"] = r.production_blocks;
  auto& est = j["estimators"] = nlohmann::ordered_json::object();
  for (const auto& t : r.estimators) {
    est[t.name] = {{"mean", t.summary.mean},   {"error", t.summary.error},
                   {"unit", t.unit},           {"blocks", t.summary.blocks},
                   {"lag1", t.summary.lag1},   {"correlated", t.summary.correlated()}};
  }
  auto& cor = j["correlators"] = nlohmann::ordered_json::object();
  for (const auto& c : r.correlators)
    cor[c.name()] = {{"bins", c.n_bins()},
                     {"blocks", c.n_blocks()},
                     {"observable_mean", c.n_blocks() > 0 ? c.observable_mean() : 0.0},
                     {"unit", correlator_unit(c.name())}};
  j["acceptance"] = {{"bisection", r.counters.bisection_acceptance()},
                     {"displace", r.counters.displace_acceptance()},
                     {"bisection_attempts_by_level", r.counters.bisection_attempts},
                     {"bisection_accepts_by_level", r.counters.bisection_accepts}};
  j["out_of_grid_pair_evaluations"] = r.out_of_grid;
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_run_outputs(const std::filesystem::path& dir, const SimulationResult& r,
                                                     int matsubara_max) {
  std::vector<std::filesystem::path> files;
  for (const auto& t : r.estimators) {
    files.push_back(std::filesystem::path("traces") / (t.name + ".dat"));
    write_trace(dir / files.back(), t);
  }
  for (const auto& c : r.correlators) {
    files.push_back(std::filesystem::path("correlators") / (c.name() + ".dat"));
    write_correlator(dir / files.back(), c);
    files.push_back(std::filesystem::path("correlators") / (c.name() + ".blocks"));
    write_correlator_blocks(dir / files.back(), c);
    if (c.n_blocks() == 0) continue;
    const int n_max = std::min(matsubara_max, (c.n_bins() - 1) / 2);
    const auto conn = c.connected();
    files.push_back(std::filesystem::path("spectra") / (c.name() + ".dat"));
    write_spectrum(dir / files.back(), to_matsubara(conn, c.beta(), n_max, true), correlator_unit(c.name()));
  }
  files.emplace_back("summary.json");
  write_text_file(dir / files.back(), summary_json(r));
  return files;
}

}  // namespace pimol
