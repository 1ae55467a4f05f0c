#include "pimol/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pimol {

namespace {

using nlohmann::json;

// Reads typed fields from one JSON object while tracking which keys were used.
class Reader {
 public:
  Reader(const json& node, std::string path, std::vector<SpecError::Issue>& issues)
      : node_(node), path_(std::move(path)), issues_(issues) {
    if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  ~Reader() {
    if (!node_.is_object()) return;
    for (const auto& [key, value] : node_.items())
      if (!used_.contains(key)) fail(field(key), "unknown key");
  }

  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const json& at(const std::string& key) {
    used_.insert(key);
    return node_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (v.is_number()) out = v.get<double>();
    else fail(field(key), "expected a number");
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (v.is_number_integer()) out = v.get<int>();
    else fail(field(key), "expected an integer");
  }

  void seed(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (v.is_number_unsigned()) out = v.get<std::uint64_t>();
    else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    else fail(field(key), "expected a non-negative integer");
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (v.is_boolean()) out = v.get<bool>();
    else fail(field(key), "expected true or false");
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (v.is_string()) out = v.get<std::string>();
    else fail(field(key), "expected a string");
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (!v.is_array()) {
      fail(field(key), "expected an array of strings");
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].is_string()) out.push_back(v[i].get<std::string>());
      else fail(field(key) + "[" + std::to_string(i) + "]", "expected a string");
    }
  }

  void vec3(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    read_vec3(at(key), field(key), out);
  }

  void vec3_list(const std::string& key, std::optional<std::vector<Vec3>>& out) {
    if (!has(key)) return;
    const auto& v = at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    if (!v.is_array()) {
      fail(field(key), "expected an array of 3-vectors");
      return;
    }
    std::vector<Vec3> points(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) read_vec3(v[i], field(key) + "[" + std::to_string(i) + "]", points[i]);
    out = std::move(points);
  }

  void fail(std::string f, std::string message) { issues_.push_back({std::move(f), std::move(message)}); }

 private:
  void read_vec3(const json& v, const std::string& f, Vec3& out) {
    if (!v.is_array() || v.size() != 3) {
      fail(f, "expected an array of 3 numbers");
      return;
    }
    for (int d = 0; d < 3; ++d) {
      if (!v[d].is_number()) {
        fail(f, "expected an array of 3 numbers");
        return;
      }
      out[d] = v[d].get<double>();
    }
  }

  const json& node_;
  std::string path_;
  std::vector<SpecError::Issue>& issues_;
  std::set<std::string> used_;
};

void read_species(const json& node, const std::string& path, SpeciesSpec& s, std::vector<SpecError::Issue>& issues) {
  Reader r(node, path, issues);
  r.string("name", s.name);
  r.number("mass", s.mass);
  r.number("charge", s.charge);
  r.integer("count", s.count);
  r.vec3_list("fixed_positions", s.fixed_positions);
  r.vec3_list("start_positions", s.start_positions);
  r.number("harmonic_omega", s.harmonic_omega);
}

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json vec3_list_json(const std::optional<std::vector<Vec3>>& list) {
  if (!list) return nullptr;
  json out = json::array();
  for (const auto& v : *list) out.push_back(vec3_json(v));
  return out;
}

}  // namespace

SystemSpec parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::vector<SpecError::Issue>{{"<document>", std::string("JSON parse error: ") + e.what()}});
  }

  SystemSpec spec;
  std::vector<SpecError::Issue> issues;
  {
    Reader r(root, "", issues);
    r.string("name", spec.name);
    r.number("beta", spec.beta);
    r.number("delta_tau", spec.delta_tau);
    r.integer("dimensions", spec.dimensions);
    r.vec3("electric_field", spec.electric_field);
    r.number("confinement_radius", spec.confinement_radius);

    if (r.has("species")) {
      const auto& list = r.at("species");
      if (!list.is_array()) {
        r.fail("species", "expected an array");
      } else {
        spec.species.resize(list.size());
        for (std::size_t i = 0; i < list.size(); ++i)
          read_species(list[i], "species[" + std::to_string(i) + "]", spec.species[i], issues);
      }
    }

    if (r.has("sampling")) {
      Reader s(r.at("sampling"), "sampling", issues);
      auto& o = spec.sampling;
      s.integer("bisection_levels", o.bisection_levels);
      s.integer("sweeps_per_block", o.sweeps_per_block);
      s.integer("n_blocks", o.n_blocks);
      s.integer("n_chains", o.n_chains);
      s.seed("rng_seed", o.rng_seed);
      s.number("displace_move_probability", o.displace_move_probability);
      s.number("displace_step", o.displace_step);
      s.number("equilibration_fraction", o.equilibration_fraction);
      s.integer("threads", o.threads);
    }

    if (r.has("pair_action")) {
      Reader p(r.at("pair_action"), "pair_action", issues);
      auto& o = spec.pair_action;
      p.integer("q_points", o.q_points);
      p.integer("s_points", o.s_points);
      p.number("q_min", o.q_min);
      p.number("q_max", o.q_max);
      p.number("s_widths", o.s_widths);
      p.integer("squarings", o.squarings);
      p.integer("l_max", o.l_max);
      p.number("epsilon", o.epsilon);
      p.number("grid_factor", o.grid_factor);
      p.number("tail_tolerance", o.tail_tolerance);
      p.string("table_dir", o.table_dir);
      p.boolean("auto_tabulate", o.auto_tabulate);
    }

    if (r.has("outputs")) {
      Reader o(r.at("outputs"), "outputs", issues);
      auto& out = spec.outputs;
      o.strings("estimators", out.estimators);
      o.strings("correlators", out.correlators);
      o.integer("correlator_bins", out.correlator_bins);
      o.integer("matsubara_max", out.matsubara_max);
      if (o.has("separation_pair")) {
        const auto& v = o.at("separation_pair");
        if (v.is_null()) {
          out.separation_pair.reset();
        } else if (v.is_array() && v.size() == 2 && v[0].is_number_integer() && v[1].is_number_integer()) {
          out.separation_pair = std::array<int, 2>{v[0].get<int>(), v[1].get<int>()};
        } else {
          o.fail("outputs.separation_pair", "expected two particle indices");
        }
      }
    }
  }
  if (!issues.empty()) throw SpecError(std::move(issues));
  return spec;
}

SystemSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(std::vector<SpecError::Issue>{{"<file>", "cannot open " + path.string()}});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string dump_config(const SystemSpec& spec) {
  json root;
  root["name"] = spec.name;
  root["beta"] = spec.beta;
  root["delta_tau"] = spec.delta_tau;
  root["dimensions"] = spec.dimensions;
  root["electric_field"] = vec3_json(spec.electric_field);
  root["confinement_radius"] = spec.confinement_radius;

  json species = json::array();
  for (const auto& s : spec.species) {
    json j;
    j["name"] = s.name;
    j["mass"] = s.mass;
    j["charge"] = s.charge;
    j["count"] = s.count;
    j["fixed_positions"] = vec3_list_json(s.fixed_positions);
    j["start_positions"] = vec3_list_json(s.start_positions);
    j["harmonic_omega"] = s.harmonic_omega;
    species.push_back(std::move(j));
  }
  root["species"] = std::move(species);

  const auto& smp = spec.sampling;
  root["sampling"] = {{"bisection_levels", smp.bisection_levels},
                      {"sweeps_per_block", smp.sweeps_per_block},
                      {"n_blocks", smp.n_blocks},
                      {"n_chains", smp.n_chains},
                      {"rng_seed", smp.rng_seed},
                      {"displace_move_probability", smp.displace_move_probability},
                      {"displace_step", smp.displace_step},
                      {"equilibration_fraction", smp.equilibration_fraction},
                      {"threads", smp.threads}};

  const auto& pa = spec.pair_action;
  root["pair_action"] = {{"q_points", pa.q_points},       {"s_points", pa.s_points},
                         {"q_min", pa.q_min},             {"q_max", pa.q_max},
                         {"s_widths", pa.s_widths},       {"squarings", pa.squarings},
                         {"l_max", pa.l_max},             {"epsilon", pa.epsilon},
                         {"grid_factor", pa.grid_factor}, {"tail_tolerance", pa.tail_tolerance},
                         {"table_dir", pa.table_dir},     {"auto_tabulate", pa.auto_tabulate}};

  const auto& out = spec.outputs;
  json outputs;
  outputs["estimators"] = out.estimators;
  outputs["correlators"] = out.correlators;
  outputs["correlator_bins"] = out.correlator_bins;
  outputs["matsubara_max"] = out.matsubara_max;
  if (out.separation_pair)
    outputs["separation_pair"] = json::array({(*out.separation_pair)[0], (*out.separation_pair)[1]});
  else
    outputs["separation_pair"] = nullptr;
  root["outputs"] = std::move(outputs);
  return root.dump(2) + "\n";
}

}  // namespace pimol
