#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rxid::io {

/// Little-endian encoder into a growable byte buffer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void str(std::string_view s) {
    u64(s.size());
    raw(s);
  }
  void f64s(std::span<const double> values) {
    u64(values.size());
    for (double v : values) f64(v);
  }

  const std::vector<char>& bytes() const noexcept { return bytes_; }

 private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t b = 0; b < sizeof(T); ++b) bytes_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  std::vector<char> bytes_;
};

/// Bounds-checked little-endian decoder; throws FormatError on underflow.
class ByteReader {
 public:
  explicit ByteReader(std::span<const char> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::string raw(std::size_t n) {
    auto s = take(n);
    return {s.begin(), s.end()};
  }
  std::string str() { return raw(checked_count(u64(), 1)); }
  std::vector<double> f64s() {
    const std::size_t n = checked_count(u64(), 8);
    std::vector<double> out(n);
    for (double& v : out) v = f64();
    return out;
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  /// Rejects counts that cannot fit in the remaining bytes.
  std::size_t checked_count(std::uint64_t count, std::size_t element_size) const;

 private:
  std::span<const char> take(std::size_t n);

  template <typename T>
  T get_le() {
    auto s = take(sizeof(T));
    T v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(static_cast<unsigned char>(s[b])) << (8 * b);
    return v;
  }

  std::span<const char> bytes_;
  std::size_t pos_ = 0;
};

/// Whole-file helpers; throw IoError.
std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const char> bytes);

}  // namespace rxid::io
