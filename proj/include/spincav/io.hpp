#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "spincav/spectra_engine.hpp"

namespace spincav {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr int kSpectrumCsvVersion = 1;

// SHA-1 of "blob <size>\0<content>", hex encoded, as git computes it.
std::string git_blob_sha1(const std::string& content);

// Writes through a temporary file in the same directory and renames it.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Header axis1,axis2,re,im,db,converged; rows follow the slow axis, then the fast one.
std::string spectrum_csv(const SpectrumMap& map);

nlohmann::json spectrum_sidecar(const SpectrumMap& map, const std::string& csv_name,
                                const std::string& csv_content);

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  double wall_time_s = 0.0;
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
  std::map<std::string, std::size_t> status_counts;
  std::vector<std::string> outputs;
  nlohmann::json extra = nlohmann::json::object();

  void add_map(const SpectrumMap& map);
  nlohmann::json to_json() const;
};

// Canonical byte form of a config, used for hashing.
std::string canonical_json(const nlohmann::json& j);

}  // namespace spincav
