#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "pimol/output.hpp"
#include "test_support.hpp"

namespace {

using namespace pimol;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Output, CorrelatorBlocksRoundTrip) {
  CorrelationAccumulator acc("dipole_z", 8, 4, 2.0);
  acc.add_block({1.0 / 3.0, 0.2, 0.1, 0.2}, 0.125);
  acc.add_block({0.4, 0.25, 0.15, 0.25}, -1e-17);
  const auto dir = std::filesystem::temp_directory_path() / "pimol_output_test";
  write_correlator_blocks(dir / "c.blocks", acc);
  const auto back = read_correlator_blocks(dir / "c.blocks");
  EXPECT_EQ(back.name(), "dipole_z");
  EXPECT_EQ(back.n_slices(), 8);
  EXPECT_EQ(back.n_bins(), 4);
  EXPECT_EQ(back.beta(), 2.0);
  EXPECT_EQ(back.blocks(), acc.blocks());
  EXPECT_EQ(back.observable_blocks(), acc.observable_blocks());
}

TEST(Output, HeadersCarryUnits) {
  const auto dir = std::filesystem::temp_directory_path() / "pimol_output_test";
  EstimatorTrace t{"energy_virial", "hartree", {-0.5, -0.49}, {}};
  write_trace(dir / "t.dat", t);
  EXPECT_NE(slurp(dir / "t.dat").find("[hartree]"), std::string::npos);
  CorrelationAccumulator acc("separation", 4, 4, 1.0);
  acc.add_block({2.0, 1.9, 1.8, 1.9}, 1.4);
  acc.add_block({2.0, 1.9, 1.8, 1.9}, 1.4);
  write_correlator(dir / "c.dat", acc);
  const auto text = slurp(dir / "c.dat");
  EXPECT_NE(text.find("tau [1/Ha]"), std::string::npos);
  EXPECT_NE(text.find("[bohr^2]"), std::string::npos);
}

TEST(Output, SummaryIsValidJson) {
  SimulationResult r;
  r.n_chains = 2;
  EstimatorTrace t{"energy_virial", "hartree", {-0.5, -0.49, -0.51}, {}};
  t.summary = summarize_blocks(t.blocks);
  r.estimators.push_back(t);
  const auto j = nlohmann::json::parse(summary_json(r));
  EXPECT_EQ(j["chains"], 2);
  EXPECT_NEAR(j["estimators"]["energy_virial"]["mean"].get<double>(), -0.5, 1e-15);
  EXPECT_EQ(j["estimators"]["energy_virial"]["unit"], "hartree");
}

}  // namespace
