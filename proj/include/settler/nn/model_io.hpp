#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "settler/nn/mlp.hpp"

namespace settler::nn {

/// Container layout (extension .snn):
///   "SETTLERNN" | u32 version | u64 header length | JSON header | f64 params
/// Integers and doubles little-endian. The header carries dims, activations,
/// input bounds, output channels, scaling, seed, stage and free metadata.
inline constexpr char kModelMagic[] = "SETTLERNN";
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr const char* kModelExtension = ".snn";

struct ModelFile {
  Mlp model;
  nlohmann::json metadata = nlohmann::json::object();
};

std::vector<unsigned char> serialize(const Mlp& model, const nlohmann::json& metadata = nlohmann::json::object());
/// Parse error for truncated or malformed bytes, config error for version or
/// shape mismatch.
ModelFile deserialize(std::span<const unsigned char> bytes);

void save_model(const std::filesystem::path& path, const Mlp& model,
                const nlohmann::json& metadata = nlohmann::json::object());
ModelFile load_model(const std::filesystem::path& path);

/// Sorted *.snn files of a directory.
std::vector<std::filesystem::path> list_models(const std::filesystem::path& dir);

}  // namespace settler::nn
