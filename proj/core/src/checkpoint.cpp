#include "checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"
#include "pimol/config.hpp"

namespace pimol {

namespace {

using nlohmann::json;

// Thread count does not change results, so it is not part of the identity.
std::string identity(const ActionContext& ctx) {
  SystemSpec s = ctx.spec().spec();
  s.sampling.threads = 1;
  return dump_config(s);
}

json counters_to_json(const MoveCounters& c) {
  return {{"bisection_attempts", c.bisection_attempts},
          {"bisection_accepts", c.bisection_accepts},
          {"displace_attempts", c.displace_attempts},
          {"displace_accepts", c.displace_accepts}};
}

MoveCounters counters_from_json(const json& j) {
  MoveCounters c;
  c.bisection_attempts = j.at("bisection_attempts").get<std::vector<std::uint64_t>>();
  c.bisection_accepts = j.at("bisection_accepts").get<std::vector<std::uint64_t>>();
  c.displace_attempts = j.at("displace_attempts");
  c.displace_accepts = j.at("displace_accepts");
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ActionContext& ctx, const std::vector<ChainState>& chains,
                     const std::vector<std::vector<BlockResult>>& blocks) {
  json doc;
  doc["format"] = "pimol-checkpoint/1";
  doc["config"] = identity(ctx);
  json jc = json::array();
  for (const auto& ch : chains) {
    const auto st = ch.rng.state();
    std::vector<double> beads;
    beads.reserve(ch.config.beads().size() * 3);
    for (const auto& b : ch.config.beads()) beads.insert(beads.end(), {b.x, b.y, b.z});
    jc.push_back({{"chain", ch.chain},
                  {"block_index", ch.block_index},
                  {"rng",
                   {{"seed", st.seed},
                    {"stream", st.stream},
                    {"block", st.block},
                    {"used", st.used},
                    {"has_spare", st.has_spare_normal},
                    {"spare", st.spare_normal}}},
                  {"counters", counters_to_json(ch.counters)},
                  {"beads", beads}});
  }
  doc["chains"] = jc;
  json jb = json::array();
  for (const auto& list : blocks) {
    json jl = json::array();
    for (const auto& b : list)
      jl.push_back({{"index", b.index},
                    {"estimators", b.estimators},
                    {"correlators", b.correlators},
                    {"observables", b.observables},
                    {"counters", counters_to_json(b.counters)}});
    jb.push_back(jl);
  }
  doc["blocks"] = jb;

  const auto bytes = json::to_cbor(doc);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData load_checkpoint(const std::filesystem::path& path, const ActionContext& ctx) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointMismatch("cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::from_cbor(bytes);
  } catch (const json::exception& e) {
    throw CheckpointMismatch(path.string() + ": unreadable checkpoint: " + e.what());
  }
  try {
    if (doc.at("format") != "pimol-checkpoint/1") throw CheckpointMismatch(path.string() + ": unknown checkpoint format");
    if (doc.at("config").get<std::string>() != identity(ctx))
      throw CheckpointMismatch(path.string() + ": checkpoint was written for a different configuration");
    CheckpointData data;
    const auto& spec = ctx.spec();
    for (const auto& jc : doc.at("chains")) {
      RandomStream::State st;
      const auto& jr = jc.at("rng");
      st.seed = jr.at("seed");
      st.stream = jr.at("stream");
      st.block = jr.at("block");
      st.used = jr.at("used");
      st.has_spare_normal = jr.at("has_spare");
      st.spare_normal = jr.at("spare");
      PathConfiguration config(spec.n_slices(), spec.species_of_particle());
      const auto beads = jc.at("beads").get<std::vector<double>>();
      if (beads.size() != config.beads().size() * 3) throw CheckpointMismatch(path.string() + ": bead count mismatch");
      auto dst = config.beads();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = {beads[3 * i], beads[3 * i + 1], beads[3 * i + 2]};
      ChainState ch(jc.at("chain").get<int>(), std::move(config), RandomStream(st), spec.spec().sampling.bisection_levels);
      ch.counters = counters_from_json(jc.at("counters"));
      ch.block_index = jc.at("block_index");
      data.chains.push_back(std::move(ch));
    }
    if (static_cast<int>(data.chains.size()) != spec.spec().sampling.n_chains)
      throw CheckpointMismatch(path.string() + ": chain count mismatch");
    for (const auto& jl : doc.at("blocks")) {
      std::vector<BlockResult> list;
      for (const auto& jb : jl) {
        BlockResult b;
        b.index = jb.at("index");
        b.estimators = jb.at("estimators").get<std::vector<double>>();
        b.correlators = jb.at("correlators").get<std::vector<std::vector<double>>>();
        b.observables = jb.at("observables").get<std::vector<double>>();
        b.counters = counters_from_json(jb.at("counters"));
        list.push_back(std::move(b));
      }
      data.blocks.push_back(std::move(list));
    }
    return data;
  } catch (const json::exception& e) {
    throw CheckpointMismatch(path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace pimol
