#pragma once

// Signal persistence: CSV (columns n,re,im) and the NSEQ1 binary cache format
// (magic "NSEQ1", little-endian i64 start, i64 end, then (end-start) pairs of
// f64 real/imaginary parts).

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "nilcorr/seq_core.hpp"

namespace nilcorr::io {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline void write_csv(std::ostream& os, const Signal& s) {
  os << "n,re,im\n";
  for (std::int64_t n = s.window().start; n < s.window().end; ++n) {
    cplx z = s.at(n);
    os << n << ',' << format_double(z.real()) << ',' << format_double(z.imag()) << '\n';
  }
}

inline Signal read_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "empty signal CSV", ErrorKind::io);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "n,re,im", "signal CSV header must be 'n,re,im'", ErrorKind::io);
  std::vector<cplx> values;
  std::int64_t first = 0, expected = 0;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::int64_t n = 0;
    double re = 0, im = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto r1 = std::from_chars(p, end, n);
    bool ok = r1.ec == std::errc{} && r1.ptr != end && *r1.ptr == ',';
    std::from_chars_result r2{}, r3{};
    if (ok) {
      r2 = std::from_chars(r1.ptr + 1, end, re);
      ok = r2.ec == std::errc{} && r2.ptr != end && *r2.ptr == ',';
    }
    if (ok) {
      r3 = std::from_chars(r2.ptr + 1, end, im);
      ok = r3.ec == std::errc{} && r3.ptr == end;
    }
    require(ok, "malformed signal CSV at line " + std::to_string(lineno), ErrorKind::io);
    if (values.empty()) {
      first = n;
      expected = n;
    }
    require(n == expected, "signal CSV indices must be consecutive (line " + std::to_string(lineno) + ")",
            ErrorKind::io);
    ++expected;
    values.emplace_back(re, im);
  }
  require(!values.empty(), "signal CSV has no rows", ErrorKind::io);
  return Signal(Window(first, expected), std::move(values));
}

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  os.write(reinterpret_cast<const char*>(&bits), 8);
}

template <typename T>
T get_le(std::istream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 8);
  require(static_cast<bool>(is), "truncated NSEQ1 stream", ErrorKind::io);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  T v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline constexpr std::string_view binary_magic = "NSEQ1";

inline void write_binary(std::ostream& os, const Signal& s) {
  os.write(binary_magic.data(), static_cast<std::streamsize>(binary_magic.size()));
  detail::put_le<std::int64_t>(os, s.window().start);
  detail::put_le<std::int64_t>(os, s.window().end);
  for (const auto& z : s.values()) {
    detail::put_le<double>(os, z.real());
    detail::put_le<double>(os, z.imag());
  }
}

inline Signal read_binary(std::istream& is) {
  std::array<char, 5> magic{};
  is.read(magic.data(), magic.size());
  require(static_cast<bool>(is) && std::string_view(magic.data(), magic.size()) == binary_magic,
          "not an NSEQ1 stream", ErrorKind::io);
  auto start = detail::get_le<std::int64_t>(is);
  auto end = detail::get_le<std::int64_t>(is);
  require(end > start, "NSEQ1 header has an empty window", ErrorKind::io);
  require(end - start <= (std::int64_t{1} << 32), "NSEQ1 window too long", ErrorKind::io);
  std::vector<cplx> values(static_cast<std::size_t>(end - start));
  for (auto& z : values) {
    double re = detail::get_le<double>(is);
    double im = detail::get_le<double>(is);
    z = {re, im};
  }
  return Signal(Window(start, end), std::move(values));
}

inline std::string to_csv_string(const Signal& s) {
  std::ostringstream os;
  write_csv(os, s);
  return os.str();
}

inline std::string to_binary_string(const Signal& s) {
  std::ostringstream os(std::ios::binary);
  write_binary(os, s);
  return os.str();
}

/// Loads a signal from a .csv or NSEQ1 file (format chosen by content).
inline Signal load_signal(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open signal file '" + path + "'", ErrorKind::io);
  char c0 = static_cast<char>(in.peek());
  if (c0 == 'N') return read_binary(in);
  return read_csv(in);
}

}  // namespace nilcorr::io
