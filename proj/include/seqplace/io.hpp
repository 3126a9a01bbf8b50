#pragma once

// Little-endian binary helpers and minimal CSV utilities.

#include "seqplace/core.hpp"

#include <array>
#include <charconv>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace seqplace::io {

template <class T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

class ByteWriter {
 public:
  void raw(const char* data, std::size_t n) { buf_.append(data, n); }
  void magic(const char (&m)[5]) { raw(m, 4); }

  template <class T>
  void scalar(T v) {
    const T le = byteswap_if_big(v);
    char tmp[sizeof(T)];
    std::memcpy(tmp, &le, sizeof(T));
    raw(tmp, sizeof(T));
  }

  void u32(std::uint32_t v) { scalar(v); }
  void f32(float v) { scalar(v); }
  void f64(double v) { scalar(v); }

  const std::string& bytes() const { return buf_; }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw ValidationError("write failed for " + path);
  }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string bytes, std::string origin) : buf_(std::move(bytes)), origin_(std::move(origin)) {}

  static ByteReader from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ByteReader(ss.str(), path);
  }

  std::size_t size() const { return buf_.size(); }
  std::size_t offset() const { return pos_; }
  const std::string& origin() const { return origin_; }

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size())
      throw FormatError(origin_ + ": truncated file, expected at least " + std::to_string(pos_ + n) +
                        " bytes, got " + std::to_string(buf_.size()));
  }

  void expect_magic(const char (&m)[5]) {
    need(4);
    if (std::memcmp(buf_.data() + pos_, m, 4) != 0)
      throw FormatError(origin_ + ": bad magic, expected '" + std::string(m, 4) + "'");
    pos_ += 4;
  }

  template <class T>
  T scalar() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return byteswap_if_big(v);
  }

  std::uint32_t u32() { return scalar<std::uint32_t>(); }
  float f32() { return scalar<float>(); }
  double f64() { return scalar<double>(); }

  void expect_end() const {
    if (pos_ != buf_.size())
      throw FormatError(origin_ + ": expected " + std::to_string(pos_) + " bytes, got " + std::to_string(buf_.size()));
  }

 private:
  std::string buf_;
  std::string origin_;
  std::size_t pos_ = 0;
};

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) {
    if (!cur.empty() && cur.back() == '\r') cur.pop_back();
    out.push_back(cur);
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    while (used < s.size() && (s[used] == ' ' || s[used] == '\r')) ++used;
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": cannot parse number '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": cannot parse integer '" + s + "'");
  }
}

/// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw ValidationError("write failed for " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace seqplace::io
