#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "settler/core/types.hpp"

namespace settler {

/// INI-style key/value configuration. Keys are addressed as "section.key".
/// Missing keys fall back to the embedded defaults of each module.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile load(const std::filesystem::path& path);
  static ConfigFile parse(std::string_view text);

  bool has(std::string_view key) const;
  double get(std::string_view key, double fallback) const;
  long get_int(std::string_view key, long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string get_string(std::string_view key, std::string_view fallback) const;

  const std::string& text() const { return text_; }
  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

 private:
  std::string text_;
  std::map<std::string, std::string, std::less<>> entries_;
};

SettlerConfig settler_config_from(const ConfigFile& file);

/// Resolves --config, then $SETTLER_CONFIG, then built-in defaults.
ConfigFile resolve_config(const std::string& cli_path);

}  // namespace settler
