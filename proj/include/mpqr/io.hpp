#pragma once

// Matrix files.
//
// Binary layout (little endian):
//   bytes 0..3   magic "MPQR"
//   bytes 4..7   u32 rows
//   bytes 8..11  u32 cols
//   byte  12     u8 precision code (0 binary16, 1 binary32, 2 binary64)
//   bytes 13..   column-major payload, rows*cols elements of 2, 4 or 8 bytes
//
// CSV: one matrix row per line, comma separated, shortest round-trip decimal.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "mpqr/error.hpp"
#include "mpqr/matrix.hpp"

namespace mpqr::io {

inline constexpr std::array<char, 4> kMagic = {'M', 'P', 'Q', 'R'};
inline constexpr std::size_t kHeaderBytes = 13;

using AnyMatrix = std::variant<Matrix<Half>, Matrix<float>, Matrix<double>>;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

template <class T>
auto raw_bits(T v) {
  if constexpr (std::is_same_v<T, Half>) return v.bits;
  else if constexpr (std::is_same_v<T, float>) return std::bit_cast<std::uint32_t>(v);
  else return std::bit_cast<std::uint64_t>(v);
}

template <class T>
T from_raw(const unsigned char* p) {
  constexpr std::size_t width = sizeof(decltype(raw_bits(T{})));
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < width; ++i) bits |= std::uint64_t{p[i]} << (8 * i);
  if constexpr (std::is_same_v<T, Half>) return Half::from_bits(static_cast<std::uint16_t>(bits));
  else if constexpr (std::is_same_v<T, float>) return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
  else return std::bit_cast<double>(bits);
}

template <class T>
AnyMatrix decode_payload(std::uint32_t rows, std::uint32_t cols, const unsigned char* p, std::size_t avail) {
  constexpr std::size_t width = sizeof(decltype(raw_bits(T{})));
  const std::size_t count = std::size_t{rows} * cols;
  if (avail != count * width) throw IoError("matrix payload has wrong length");
  Matrix<T> m(rows, cols);
  for (std::size_t i = 0; i < count; ++i) m.values()[i] = from_raw<T>(p + i * width);
  return m;
}

}  // namespace detail

template <class T>
std::string encode_binary(const Matrix<T>& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max())
    throw IoError("matrix too large for the binary format");
  std::string out(kMagic.begin(), kMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.push_back(static_cast<char>(Matrix<T>::precision));
  for (const T& v : m.values()) {
    const auto bits = detail::raw_bits(v);
    for (std::size_t i = 0; i < sizeof(bits); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
  return out;
}

inline AnyMatrix decode_binary(std::string_view bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw IoError("not an MPQR matrix file");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t rows = detail::get_u32(p + 4);
  const std::uint32_t cols = detail::get_u32(p + 8);
  const std::size_t avail = bytes.size() - kHeaderBytes;
  switch (p[12]) {
    case 0: return detail::decode_payload<Half>(rows, cols, p + kHeaderBytes, avail);
    case 1: return detail::decode_payload<float>(rows, cols, p + kHeaderBytes, avail);
    case 2: return detail::decode_payload<double>(rows, cols, p + kHeaderBytes, avail);
    default: throw IoError("unknown precision code " + std::to_string(p[12]));
  }
}

/// Any stored precision, widened (exactly) to binary64.
inline Matrix<double> to_binary64(const AnyMatrix& any) {
  return std::visit([](const auto& m) { return Matrix<double>::from(m); }, any);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

template <class T>
void write_binary(const std::string& path, const Matrix<T>& m) {
  write_file(path, encode_binary(m));
}

inline AnyMatrix read_binary(const std::string& path) { return decode_binary(read_file(path)); }

/// Shortest decimal that parses back to the same binary64 value.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return {buf.data(), end};
}

template <class T>
std::string encode_csv(const Matrix<T>& m) {
  std::string out;
  for (index_t i = 0; i < m.rows(); ++i) {
    for (index_t j = 0; j < m.cols(); ++j) {
      if (j != 0) out.push_back(',');
      out += format_double(scalar_cast<double>(m(i, j)));
    }
    out.push_back('\n');
  }
  return out;
}

inline Matrix<double> decode_csv(std::string_view text) {
  std::vector<double> values;
  index_t rows = 0;
  index_t cols = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    index_t count = 0;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view field = line.substr(start, comma == std::string_view::npos ? line.size() - start : comma - start);
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size())
        throw IoError("bad CSV number '" + std::string(field) + "' on row " + std::to_string(rows + 1));
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    else if (count != cols) throw IoError("ragged CSV row " + std::to_string(rows + 1));
    ++rows;
  }
  Matrix<double> m(rows, cols);
  for (index_t i = 0; i < rows; ++i)
    for (index_t j = 0; j < cols; ++j) m(i, j) = values[i * cols + j];
  return m;
}

template <class T>
void write_csv(const std::string& path, const Matrix<T>& m) {
  write_file(path, encode_csv(m));
}

inline Matrix<double> read_csv(const std::string& path) { return decode_csv(read_file(path)); }

/// Loads a matrix from `path`, choosing the format by extension (".csv" or binary).
inline Matrix<double> load_matrix(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_csv(path);
  return to_binary64(read_binary(path));
}

}  // namespace mpqr::io
