#pragma once

// Binary file formats:
//  - SMFT: flat float32 matrix with a small header (magic "SMFT", u32 rows,
//    u32 cols, little-endian payload). Used for feature files and embedding
//    dumps.
//  - SMCK: named-tensor container for checkpoints, float64 so that a
//    save/load round trip reproduces parameters bitwise. Carries two JSON
//    blobs (config snapshot, pseudo-label store snapshot).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "semanticmac/util.hpp"

namespace smac {

namespace detail {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& ctx) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(is), "unexpected end of file while reading " + ctx);
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const std::string& ctx) {
  auto len = read_pod<std::uint32_t>(is, ctx);
  std::string s(len, '\0');
  is.read(s.data(), len);
  require(static_cast<bool>(is), "unexpected end of file while reading " + ctx);
  return s;
}

}  // namespace detail

inline void write_smft(const std::string& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  require(os.is_open(), "cannot open '" + path + "' for writing");
  os.write("SMFT", 4);
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) detail::write_pod<float>(os, static_cast<float>(m(i, j)));
  require(static_cast<bool>(os), "write failure on '" + path + "'");
}

inline Matrix read_smft(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.is_open(), "cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::memcmp(magic, "SMFT", 4) == 0,
          "'" + path + "' is not an SMFT file");
  auto rows = detail::read_pod<std::uint32_t>(is, path);
  auto cols = detail::read_pod<std::uint32_t>(is, path);
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = detail::read_pod<float>(is, path);
  return m;
}

/// Named-tensor container plus config and pseudo-label snapshots.
struct Checkpoint {
  std::map<std::string, Matrix> tensors;  // ordered: deterministic files
  std::string config_json;
  std::string store_json;

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    require(os.is_open(), "cannot open '" + path + "' for writing");
    os.write("SMCK", 4);
    detail::write_pod<std::uint32_t>(os, 1u);  // version
    detail::write_string(os, config_json);
    detail::write_string(os, store_json);
    detail::write_pod<std::uint64_t>(os, tensors.size());
    for (const auto& [name, m] : tensors) {
      detail::write_string(os, name);
      detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
      detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) detail::write_pod<double>(os, m(i, j));
    }
    require(static_cast<bool>(os), "write failure on '" + path + "'");
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.is_open(), "cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    require(static_cast<bool>(is) && std::memcmp(magic, "SMCK", 4) == 0,
            "'" + path + "' is not a checkpoint file");
    auto version = detail::read_pod<std::uint32_t>(is, path);
    require(version == 1, "unsupported checkpoint version");
    Checkpoint ck;
    ck.config_json = detail::read_string(is, path);
    ck.store_json = detail::read_string(is, path);
    auto count = detail::read_pod<std::uint64_t>(is, path);
    for (std::uint64_t t = 0; t < count; ++t) {
      std::string name = detail::read_string(is, path);
      auto rows = detail::read_pod<std::uint32_t>(is, path);
      auto cols = detail::read_pod<std::uint32_t>(is, path);
      Matrix m(rows, cols);
      for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = detail::read_pod<double>(is, path);
      ck.tensors.emplace(std::move(name), std::move(m));
    }
    return ck;
  }
};

}  // namespace smac
