#include <gtest/gtest.h>

#include <algorithm>

#include "pimol/model.hpp"
#include "pimol/rng.hpp"
#include "test_support.hpp"

namespace {

using namespace pimol;

std::vector<std::string> issue_fields(const SystemSpec& s) {
  try {
    validate_spec(s);
  } catch (const SpecError& e) {
    std::vector<std::string> out;
    for (const auto& i : e.issues()) out.push_back(i.field);
    return out;
  }
  return {};
}

bool contains(const std::vector<std::string>& v, const std::string& x) { return std::ranges::find(v, x) != v.end(); }

TEST(Model, SliceCountFromBetaAndStep) {
  EXPECT_EQ(validate_spec(support::hydrogen_spec(20.0, 0.05)).n_slices(), 400);
  EXPECT_EQ(validate_spec(support::sho_spec(1.0, 10.0, 0.05)).n_slices(), 200);
}

TEST(Model, RejectsNonIntegerSliceCount) {
  EXPECT_TRUE(contains(issue_fields(support::free_particle_spec(1.0, 0.3)), "delta_tau"));
}

TEST(Model, ReportsEveryProblem) {
  auto s = support::free_particle_spec(-1.0, 0.1);
  s.species[0].mass = 0.0;
  s.sampling.n_blocks = 1;
  const auto f = issue_fields(s);
  EXPECT_TRUE(contains(f, "beta"));
  EXPECT_TRUE(contains(f, "species[0].mass"));
  EXPECT_TRUE(contains(f, "sampling.n_blocks"));
}

TEST(Model, ConfinementRadiusIsChecked) {
  auto s = support::hydrogen_spec(2.0, 0.05);
  s.confinement_radius = -1.0;
  EXPECT_TRUE(contains(issue_fields(s), "confinement_radius"));
  s.confinement_radius = 0.5;  // electron starts farther out
  s.species[0].start_positions = std::vector<Vec3>{{0.0, 0.0, 1.0}};
  EXPECT_TRUE(contains(issue_fields(s), "species[0].start_positions"));
  s.confinement_radius = 2.0;
  EXPECT_TRUE(issue_fields(s).empty());
}

TEST(Model, FixedPositionCountMustMatch) {
  auto s = support::h2_fixed_spec(1.4, 2.0, 0.05);
  s.species[1].fixed_positions->pop_back();
  EXPECT_TRUE(contains(issue_fields(s), "species[1].fixed_positions"));
}

TEST(Model, CoulombNeedsThreeDimensions) {
  auto s = support::hydrogen_spec(2.0, 0.05);
  s.dimensions = 1;
  EXPECT_TRUE(contains(issue_fields(s), "dimensions"));
}

TEST(Model, MobileH2Channels) {
  SystemSpec s;
  s.beta = 1.0;
  s.delta_tau = 0.01;
  s.species = {SpeciesSpec{.name = "e", .mass = 1.0, .charge = -1.0, .count = 2},
               SpeciesSpec{.name = "p", .mass = 1836.15267, .charge = 1.0, .count = 2}};
  const auto v = validate_spec(s);
  ASSERT_EQ(v.pair_channels().size(), 3u);
  const auto& ch = v.pair_channels();
  EXPECT_EQ(ch[0].label, "e-e");
  EXPECT_DOUBLE_EQ(ch[0].mu, 0.5);
  EXPECT_DOUBLE_EQ(ch[0].z, 1.0);
  EXPECT_EQ(ch[1].label, "e-p");
  EXPECT_NEAR(ch[1].mu, 0.99946, 1e-5);
  EXPECT_DOUBLE_EQ(ch[1].z, -1.0);
  EXPECT_EQ(ch[2].label, "p-p");
  EXPECT_NEAR(ch[2].mu, 918.076, 1e-3);
  // The protons are the default separation pair.
  ASSERT_TRUE(v.separation_pair());
  EXPECT_EQ((*v.separation_pair())[0], 2);
  EXPECT_EQ((*v.separation_pair())[1], 3);
}

TEST(Model, FixedMembersChangeTheEffectiveMass) {
  const auto v = validate_spec(support::h2_fixed_spec(1.4, 1.0, 0.05));
  const auto& ch = v.pair_channels();
  ASSERT_EQ(ch.size(), 3u);
  EXPECT_DOUBLE_EQ(ch[1].mu, 1.0);  // e-p with the proton pinned
  EXPECT_EQ(ch[2].kind, PairKind::fixed);
  EXPECT_EQ(v.mobile_particles().size(), 2u);
}

TEST(Model, NeutralPairsGetNoChannel) {
  SystemSpec s;
  s.beta = 1.0;
  s.delta_tau = 0.1;
  s.species = {SpeciesSpec{.name = "a", .mass = 1.0, .charge = 0.0, .count = 1},
               SpeciesSpec{.name = "b", .mass = 1.0, .charge = 1.0, .count = 1}};
  const auto v = validate_spec(s);
  EXPECT_TRUE(v.pair_channels().empty());
  EXPECT_EQ(v.channel_index(0, 1), -1);
}

TEST(Model, SeparationRequestWithoutPairFails) {
  auto s = support::hydrogen_spec(1.0, 0.05);
  s.outputs.estimators = {"separation"};
  EXPECT_TRUE(contains(issue_fields(s), "outputs.separation_pair"));
}

TEST(Model, InitialConfigurationHonoursPositions) {
  const auto v = validate_spec(support::h2_fixed_spec(1.4, 1.0, 0.05));
  RandomStream rng(1, 0);
  const auto c = build_initial_configuration(v, rng);
  for (int j = 0; j < c.n_slices(); ++j) {
    EXPECT_DOUBLE_EQ(c.bead(2, j)[2], -0.7);
    EXPECT_DOUBLE_EQ(c.bead(3, j)[2], 0.7);
    EXPECT_DOUBLE_EQ(c.bead(0, j)[0], 0.5);
  }
  EXPECT_EQ(c.bead(0, -1), c.bead(0, c.n_slices() - 1));
}

}  // namespace
