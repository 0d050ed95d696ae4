#include "rxid/binary_io.hpp"

#include <fstream>
#include <iterator>

#include "rxid/error.hpp"

namespace rxid::io {

std::span<const char> ByteReader::take(std::size_t n) {
  if (n > remaining())
    throw Error(ErrorCode::FormatError, "unexpected end of data at byte " + std::to_string(pos_));
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::size_t ByteReader::checked_count(std::uint64_t count, std::size_t element_size) const {
  if (element_size != 0 && count > remaining() / element_size)
    throw Error(ErrorCode::FormatError, "length field " + std::to_string(count) + " exceeds remaining data");
  return static_cast<std::size_t>(count);
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace rxid::io
