#pragma once

#include <filesystem>
#include <string>

#include "pimol/model.hpp"

namespace pimol {

/// Parses a JSON configuration document. Unknown keys and type mismatches
/// raise SpecError with the offending field path; defaults fill the rest.
SystemSpec parse_config(const std::string& text);
SystemSpec load_config(const std::filesystem::path& path);

/// Serializes every field, so parse_config(dump_config(s)) == s.
std::string dump_config(const SystemSpec& spec);

}  // namespace pimol
