#pragma once

#include <filesystem>
#include <json.hpp>
#include <memory>

#include "pimol/action.hpp"
#include "pimol/model.hpp"
#include "pimol/pair_action.hpp"

namespace pimol::support {

/// Parsed tests/fixtures/oracle_values.json.
const nlohmann::json& fixtures();

/// Directory for tables shared between test processes (PIMOL_TEST_TABLES,
/// else ./test_tables).
std::filesystem::path table_cache_dir();

/// Loads the channel tables from the cache, tabulating any that are missing.
std::shared_ptr<const ActionContext> make_context(const SystemSpec& spec);

/// Default-settings electron-proton table (mu = 1, z = -1, dt = 0.05),
/// as used by the fixed-proton hydrogen runs.
std::shared_ptr<const PairActionTable> fixed_proton_table();

/// One 1-D particle of mass m in a harmonic well.
SystemSpec sho_spec(double omega, double beta, double delta_tau, double mass = 1.0);
/// One free 3-D particle.
SystemSpec free_particle_spec(double beta, double delta_tau, double mass = 1.0);
/// Electron around a proton pinned at the origin.
SystemSpec hydrogen_spec(double beta, double delta_tau, Vec3 field = {});
/// Two electrons and two protons pinned at (0, 0, +-D/2).
SystemSpec h2_fixed_spec(double separation, double beta, double delta_tau);

/// Two electrons and two mobile protons; the proton pair is the separation pair.
SystemSpec h2_mobile_spec(double beta, double delta_tau);

}  // namespace pimol::support
