#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace nosac {

struct ArtifactRecord {
  std::string path; // relative to the run directory
  std::uint64_t bytes = 0;
  std::string hash; // git blob SHA-1
};

struct RunManifest {
  std::string command;
  nlohmann::json args; // command options needed to re-run
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<ArtifactRecord> artifacts;
  std::map<std::string, double> timings; // seconds

  /// Hashes `file` and records it relative to `root`.
  void add_artifact(const std::filesystem::path& root, const std::filesystem::path& file);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  /// Writes via a temporary file and rename.
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

/// SHA-1 of "blob <size>\0" + contents, lowercase hex.
std::string git_blob_hash(const std::filesystem::path& file);
std::string git_blob_hash_bytes(const std::string& bytes);

/// Writes `text` to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace nosac
