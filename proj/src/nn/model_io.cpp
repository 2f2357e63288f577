#include "settler/nn/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"

namespace settler::nn {

using nlohmann::json;

namespace {

constexpr std::size_t kMagicLen = sizeof(kModelMagic) - 1;

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> b) : bytes_(b) {}

  std::span<const unsigned char> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) fail(ErrorCategory::parse, std::string("model file truncated in ") + what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint64_t u64(const char* what) {
    auto s = take(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
  }

  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

json header_of(const Mlp& m, const json& metadata) {
  json h;
  h["dims"] = m.dims();
  h["hidden_activation"] = to_string(m.hidden());
  h["output_activation"] = to_string(m.head());
  json bounds = json::array();
  for (const auto& b : m.input_bounds()) bounds.push_back({b.lb, b.ub});
  h["input_bounds"] = bounds;
  json outs = json::array();
  for (const auto& c : m.outputs()) {
    json o{{"name", c.name}, {"role", to_string(c.role)}, {"offset", c.offset}, {"span", c.span}};
    if (c.skip_input >= 0) {
      o["skip_input"] = c.skip_input;
      o["skip_gain"] = c.skip_gain;
    }
    outs.push_back(std::move(o));
  }
  h["outputs"] = outs;
  h["scaling"] = {{"h_scale", m.scaling.h_scale}, {"q_scale", m.scaling.q_scale}};
  h["seed"] = m.seed;
  h["stage"] = m.stage;
  h["param_count"] = m.param_count();
  h["metadata"] = metadata;
  return h;
}

}  // namespace

std::vector<unsigned char> serialize(const Mlp& model, const json& metadata) {
  model.validate();
  const std::string header = header_of(model, metadata).dump();
  std::vector<unsigned char> out(kModelMagic, kModelMagic + kMagicLen);
  put_u32(out, kModelVersion);
  put_u64(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  out.reserve(out.size() + 8 * model.param_count());
  for (double p : model.params()) put_u64(out, std::bit_cast<std::uint64_t>(p));
  return out;
}

ModelFile deserialize(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  auto magic = r.take(kMagicLen, "magic");
  if (!std::equal(magic.begin(), magic.end(), kModelMagic)) fail(ErrorCategory::parse, "not a model file (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != kModelVersion) {
    fail(ErrorCategory::config, "model file version " + std::to_string(version) + " is not supported");
  }
  const std::uint64_t header_len = r.u64("header length");
  auto hb = r.take(header_len, "header");
  json h;
  try {
    h = json::parse(hb.begin(), hb.end());
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, std::string("model header: ") + e.what());
  }

  ModelFile file;
  try {
    Mlp m(h.at("dims").get<std::vector<std::size_t>>(),
          activation_from_string(h.at("hidden_activation").get<std::string>()),
          activation_from_string(h.at("output_activation").get<std::string>()));
    if (h.at("param_count").get<std::size_t>() != m.param_count()) {
      fail(ErrorCategory::config, "model header param_count does not match dims");
    }
    std::vector<Interval> bounds;
    for (const auto& b : h.at("input_bounds")) bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    m.set_input_bounds(std::move(bounds));
    std::vector<OutputChannel> outs;
    for (const auto& c : h.at("outputs")) {
      outs.push_back({c.at("name").get<std::string>(), output_role_from_string(c.at("role").get<std::string>()),
                      c.at("offset").get<double>(), c.at("span").get<double>(), c.value("skip_input", -1),
                      c.value("skip_gain", 0.0)});
    }
    m.set_outputs(std::move(outs));
    m.scaling.h_scale = h.at("scaling").at("h_scale").get<double>();
    m.scaling.q_scale = h.at("scaling").at("q_scale").get<double>();
    m.seed = h.at("seed").get<std::uint64_t>();
    m.stage = h.at("stage").get<std::string>();
    file.metadata = h.value("metadata", json::object());
    file.model = std::move(m);
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, std::string("model header: ") + e.what());
  }
  for (double& p : file.model.params()) p = std::bit_cast<double>(r.u64("parameters"));
  if (!r.done()) fail(ErrorCategory::parse, "trailing bytes after model parameters");
  file.model.validate();
  return file;
}

void save_model(const std::filesystem::path& path, const Mlp& model, const json& metadata) {
  const auto bytes = serialize(model, metadata);
  write_file_atomic(path, std::span<const unsigned char>(bytes));
}

ModelFile load_model(const std::filesystem::path& path) {
  const std::string raw = read_file(path);
  try {
    return deserialize(std::span(reinterpret_cast<const unsigned char*>(raw.data()), raw.size()));
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

std::vector<std::filesystem::path> list_models(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == kModelExtension) out.push_back(entry.path());
  }
  if (ec) fail(ErrorCategory::io, "cannot list " + dir.string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace settler::nn
