#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "cbmbr/core_types.hpp"

namespace cbmbr {

// Layout (all little-endian):
//   0  char[8]  "CBMBREMB"
//   8  u32      version (1)
//  12  u64      rows
//  20  u32      dims
//  24  f32[rows*dims] row-major payload
inline constexpr std::array<char, 8> kEmbeddingMagic{'C', 'B', 'M', 'B', 'R', 'E', 'M', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 24;

namespace detail {

template <typename U>
void put_le(std::vector<unsigned char>& out, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<unsigned char>((value >> (8 * b)) & 0xFFu));
}

template <typename U>
U get_le(const unsigned char* p) {
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(p[b]) << (8 * b);
  return value;
}

}  // namespace detail

inline std::vector<unsigned char> encode_embeddings(const EmbeddingMatrix& m) {
  std::vector<unsigned char> out;
  out.reserve(kEmbeddingHeaderBytes + m.data().size() * 4);
  for (char c : kEmbeddingMagic) out.push_back(static_cast<unsigned char>(c));
  detail::put_le<std::uint32_t>(out, kEmbeddingVersion);
  detail::put_le<std::uint64_t>(out, m.rows());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dims()));
  for (float v : m.data()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline EmbeddingMatrix decode_embeddings(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kEmbeddingMagic.size() ||
      std::memcmp(bytes.data(), kEmbeddingMagic.data(), kEmbeddingMagic.size()) != 0)
    throw Error(Errc::BadMagic, "not an embedding file");
  if (bytes.size() < kEmbeddingHeaderBytes) throw Error(Errc::TruncatedFile, "header truncated");
  const auto version = detail::get_le<std::uint32_t>(bytes.data() + 8);
  if (version != kEmbeddingVersion) throw Error(Errc::VersionUnsupported, "version " + std::to_string(version));
  const auto rows = detail::get_le<std::uint64_t>(bytes.data() + 12);
  const auto dims = detail::get_le<std::uint32_t>(bytes.data() + 20);
  if (dims == 0) throw Error(Errc::DimensionMismatch, "dims must be >= 1");

  const std::size_t payload = bytes.size() - kEmbeddingHeaderBytes;
  if (rows > payload / 4 / dims || payload != rows * dims * 4)
    throw Error(Errc::TruncatedFile, "payload is " + std::to_string(payload) + " bytes, header implies " +
                                         std::to_string(rows) + "x" + std::to_string(dims) + " floats");

  std::vector<float> data(rows * dims);
  const unsigned char* p = bytes.data() + kEmbeddingHeaderBytes;
  for (std::size_t i = 0; i < data.size(); ++i, p += 4) data[i] = std::bit_cast<float>(detail::get_le<std::uint32_t>(p));
  return EmbeddingMatrix(rows, dims, std::move(data));
}

inline void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  const auto bytes = encode_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes);
}

}  // namespace cbmbr
