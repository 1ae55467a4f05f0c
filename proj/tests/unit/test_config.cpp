#include <gtest/gtest.h>

#include <algorithm>

#include "pimol/config.hpp"
#include "test_support.hpp"

namespace {

using namespace pimol;

bool has_issue(const SpecError& e, const std::string& field) {
  return std::ranges::any_of(e.issues(), [&](const auto& i) { return i.field == field; });
}

TEST(Config, RoundTripPreservesEverything) {
  auto s = support::h2_fixed_spec(1.4, 20.0, 0.05);
  s.electric_field = {0.0, 0.0, 0.01};
  s.sampling.rng_seed = 0xfedcba9876543210ull;
  s.outputs.estimators = {"energy_virial", "polarization"};
  s.outputs.correlators = {"dipole_z"};
  s.outputs.separation_pair = std::array<int, 2>{2, 3};
  s.pair_action.q_points = 200;
  s.confinement_radius = 25.0;
  const auto text = dump_config(s);
  EXPECT_EQ(parse_config(text), s);
  EXPECT_EQ(dump_config(parse_config(text)), text);
}

TEST(Config, DefaultsFillMissingSections) {
  const auto s = parse_config(R"({"beta": 2.0, "delta_tau": 0.1, "species": [{"name": "x", "mass": 1}]})");
  EXPECT_EQ(s.sampling, SamplerSettings{});
  EXPECT_EQ(s.pair_action, PairActionSettings{});
  EXPECT_EQ(s.dimensions, 3);
}

TEST(Config, UnknownKeyNamesTheFieldPath) {
  try {
    parse_config(R"({"beta": 2.0, "sampling": {"n_blockz": 3}})");
    FAIL() << "expected SpecError";
  } catch (const SpecError& e) {
    EXPECT_TRUE(has_issue(e, "sampling.n_blockz"));
  }
}

TEST(Config, TypeMismatchNamesTheFieldPath) {
  try {
    parse_config(R"({"beta": "hot", "species": [{"name": "x", "mass": "heavy"}]})");
    FAIL() << "expected SpecError";
  } catch (const SpecError& e) {
    EXPECT_TRUE(has_issue(e, "beta"));
    EXPECT_TRUE(has_issue(e, "species[0].mass"));
  }
}

TEST(Config, MalformedJsonIsASpecError) { EXPECT_THROW(parse_config("{beta: 1"), SpecError); }

TEST(Config, SeedSurvivesAs64BitInteger) {
  auto s = support::free_particle_spec(1.0, 0.1);
  s.sampling.rng_seed = 18446744073709551557ull;
  EXPECT_EQ(parse_config(dump_config(s)).sampling.rng_seed, 18446744073709551557ull);
}

}  // namespace
