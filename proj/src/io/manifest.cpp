#include "settler/io/manifest.hpp"

#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"

namespace settler::io {

namespace {
constexpr const char* kSchema = "settler-manifest/1";
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["schema"] = kSchema;
  j["version"] = version;
  j["argv"] = argv;
  j["out"] = out_arg;
  j["out_is_dir"] = out_is_dir;
  j["config_sha256"] = config_sha256;
  j["config"] = config_text;
  j["seeds"] = seeds;
  j["isa"] = isa;
  j["threads"] = threads;
  j["outputs"] = nlohmann::json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}});
  return j;
}

Manifest Manifest::from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kSchema) {
      fail(ErrorCategory::parse, "manifest: unsupported schema '" + j.at("schema").get<std::string>() + "'");
    }
    Manifest m;
    m.version = j.at("version").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.out_arg = j.at("out").get<std::string>();
    m.out_is_dir = j.at("out_is_dir").get<bool>();
    m.config_sha256 = j.at("config_sha256").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    m.seeds = j.at("seeds");
    m.isa = j.at("isa").get<std::string>();
    m.threads = j.at("threads").get<std::size_t>();
    for (const auto& o : j.at("outputs")) {
      m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("manifest: ") + e.what());
  }
}

std::filesystem::path Manifest::out_base() const {
  const std::filesystem::path out(out_arg);
  return out_is_dir ? out : out.parent_path();
}

std::filesystem::path Manifest::location(const std::filesystem::path& out, bool out_is_dir) {
  if (out_is_dir) return out / "manifest.json";
  std::filesystem::path p = out;
  p += ".manifest.json";
  return p;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::vector<OutputRecord> hash_outputs(const std::filesystem::path& base,
                                       const std::vector<std::filesystem::path>& files) {
  std::vector<OutputRecord> out;
  for (const auto& f : files) {
    const std::filesystem::path full = std::filesystem::absolute(f).lexically_normal();
    const std::filesystem::path rel = full.lexically_relative(std::filesystem::absolute(base).lexically_normal());
    out.push_back({rel.generic_string(), file_sha256(full)});
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  write_file_atomic(path, manifest.to_json().dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, path.string() + ": " + e.what());
  }
  return Manifest::from_json(j);
}

}  // namespace settler::io
