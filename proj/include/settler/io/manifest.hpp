#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace settler::io {

struct OutputRecord {
  std::string path;  // relative to the output base directory
  std::string sha256;
};

/// Everything needed to repeat a CLI run: the argument vector (input paths
/// absolute), the resolved configuration text, seeds, kernel set, thread
/// count and the hashes of every file written.
struct Manifest {
  std::string version;
  std::vector<std::string> argv;
  std::string out_arg;  // value given to --out
  bool out_is_dir = false;
  std::string config_text;
  std::string config_sha256;
  nlohmann::json seeds = nlohmann::json::object();
  std::string isa;
  std::size_t threads = 1;
  std::vector<OutputRecord> outputs;

  nlohmann::json to_json() const;
  /// Parse error for a missing field or unknown schema.
  static Manifest from_json(const nlohmann::json& j);

  /// Base directory that output paths are relative to.
  std::filesystem::path out_base() const;
  /// manifest.json inside a directory output, <file>.manifest.json otherwise.
  static std::filesystem::path location(const std::filesystem::path& out, bool out_is_dir);
};

std::string file_sha256(const std::filesystem::path& path);

/// Hashes `files` (absolute or relative to the working directory) and
/// records them relative to `base`.
std::vector<OutputRecord> hash_outputs(const std::filesystem::path& base,
                                       const std::vector<std::filesystem::path>& files);

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace settler::io
