#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace pimol::cli {

/// Lowercase hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::string config_sha256;  // of the normalized config text
  std::string version;
  std::uint64_t seed = 0;
  int chains = 0;
  int threads = 0;
  std::string started_utc;
  std::string finished_utc;
  double wall_seconds = 0.0;
  std::vector<std::filesystem::path> files;  // relative to the manifest's directory
};

/// Lists every file with its size and checksum.
nlohmann::ordered_json manifest_json(const Manifest& m, const std::filesystem::path& dir);

std::string utc_now();

}  // namespace pimol::cli
