#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ecgnet/errors.hpp"
#include "ecgnet/network.hpp"

namespace ecgnet::io {

inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) throw TruncatedFile("unexpected end of file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
  const std::uint32_t bits = read_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace detail

// ECGM model file:
//   magic "ECGM", version u32 LE, descriptor length u32 LE + UTF-8 bytes,
//   then per parameter tensor: rank u32, dims u32 each, raw f32 LE data.
inline void save_model(const nn::Model<float>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write("ECGM", 4);
  detail::write_u32(os, kModelVersion);
  const std::string& desc = model.spec.descriptor;
  detail::write_u32(os, static_cast<std::uint32_t>(desc.size()));
  os.write(desc.data(), static_cast<std::streamsize>(desc.size()));
  for (const auto& t : model.params) {
    detail::write_u32(os, static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) detail::write_u32(os, static_cast<std::uint32_t>(d));
    for (float v : t.data) detail::write_f32(os, v);
  }
  if (!os) throw Error("write failed for " + path);
}

inline nn::Model<float> load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::string(magic, 4) != "ECGM")
    throw BadMagic("not an ECGM file: " + path);
  const std::uint32_t version = detail::read_u32(is);
  if (version != kModelVersion)
    throw VersionUnsupported("model format version " + std::to_string(version));
  const std::uint32_t desc_len = detail::read_u32(is);
  std::string desc(desc_len, '\0');
  is.read(desc.data(), desc_len);
  if (is.gcount() != static_cast<std::streamsize>(desc_len))
    throw TruncatedFile("descriptor truncated");

  nn::Model<float> model;
  model.spec = nn::build_preset(desc);
  const auto shapes = nn::param_shapes(model.spec);
  for (const auto& shape : shapes) {
    const std::uint32_t rank = detail::read_u32(is);
    if (rank != shape.size()) throw ShapeMismatch("tensor rank mismatch in " + path);
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(detail::read_u32(is));
    if (dims != shape) throw ShapeMismatch("tensor dims mismatch in " + path);
    Tensor<float> t(dims);
    for (auto& v : t.data) v = detail::read_f32(is);
    model.params.push_back(std::move(t));
  }
  return model;
}

}  // namespace ecgnet::io
