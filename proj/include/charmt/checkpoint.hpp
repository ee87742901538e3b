#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "charmt/config.hpp"
#include "charmt/error.hpp"
#include "charmt/model.hpp"

namespace charmt {

// Versioned checkpoint container: magic "CHARMT01", the model config as
// JSON, then every named parameter tensor as (name, shape, float32 values),
// all little-endian. Loading validates shapes against the live model.
inline constexpr char kCheckpointMagic[8] = {'C', 'H', 'A', 'R', 'M', 'T', '0', '1'};

namespace detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(in.good(), "truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

inline float read_f32(std::istream& in) {
  const std::uint32_t bits = read_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  require(in.good(), "truncated checkpoint");
  return s;
}

}  // namespace detail

template <typename S>
void save_checkpoint(const std::string& path, const TranslationModel<S>& model) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);

  nlohmann::json meta = model_config_to_json(model.config());
  meta["mode"] = to_string(model.kind());
  detail::write_string(out, meta.dump());

  const auto& params = model.store().all();
  detail::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    detail::write_string(out, p->name);
    detail::write_u32(out, static_cast<std::uint32_t>(p->value.shape().size()));
    for (const int d : p->value.shape())
      detail::write_u32(out, static_cast<std::uint32_t>(d));
    for (int i = 0; i < p->value.size(); ++i)
      detail::write_f32(out, static_cast<float>(p->value[i]));
  }
  require(out.good(), "failed writing checkpoint: " + path);
}

// Reads parameter values into an already constructed model. The stored mode
// and every tensor name/shape must match what the model registered.
template <typename S>
void load_checkpoint(const std::string& path, TranslationModel<S>& model) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0,
          "not a checkpoint file (bad magic): " + path);

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_string(in));
  } catch (const nlohmann::json::exception& e) {
    fail("corrupt checkpoint metadata: " + std::string(e.what()));
  }
  require(meta.value("mode", "") == to_string(model.kind()),
          "checkpoint mode does not match the configured mode");

  const std::uint32_t count = detail::read_u32(in);
  require(count == model.store().size(),
          "checkpoint has " + std::to_string(count) + " tensors, model expects " +
              std::to_string(model.store().size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = detail::read_string(in);
    require(model.store().contains(name), "unexpected tensor in checkpoint: " + name);
    Param<S>& p = model.store().at(name);
    const std::uint32_t rank = detail::read_u32(in);
    require(rank == p.value.shape().size(), "rank mismatch for tensor " + name);
    int size = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const int extent = static_cast<int>(detail::read_u32(in));
      require(extent == p.value.shape()[d],
              "shape mismatch for tensor " + name + " (config and checkpoint disagree)");
      size *= extent;
    }
    for (int v = 0; v < size; ++v)
      p.value[v] = static_cast<S>(detail::read_f32(in));
  }
}

// Reads just the metadata header, for mode/dimension discovery.
inline nlohmann::json checkpoint_metadata(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0,
          "not a checkpoint file (bad magic): " + path);
  try {
    return nlohmann::json::parse(detail::read_string(in));
  } catch (const nlohmann::json::exception& e) {
    fail("corrupt checkpoint metadata: " + std::string(e.what()));
  }
}

}  // namespace charmt
