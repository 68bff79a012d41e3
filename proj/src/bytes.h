#ifndef COMPPROBE_SRC_BYTES_H_
#define COMPPROBE_SRC_BYTES_H_

// Little-endian encoding helpers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "compprobe/errors.h"

namespace compprobe::bytes {

inline void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline void PutString(std::string& out, std::string_view s) {
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("string too long for binary format");
  }
  PutU32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

inline void PutFloat(std::string& out, float f) {
  PutU32(out, std::bit_cast<std::uint32_t>(f));
}

inline void PutDouble(std::string& out, double d) {
  PutU64(out, std::bit_cast<std::uint64_t>(d));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t U32(const char* what) {
    Need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t U64(const char* what) {
    const std::uint64_t lo = U32(what);
    const std::uint64_t hi = U32(what);
    return lo | (hi << 32);
  }

  std::string String(const char* what) {
    const std::uint32_t n = U32(what);
    Need(n, what);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  float Float(const char* what) { return std::bit_cast<float>(U32(what)); }
  double Double(const char* what) { return std::bit_cast<double>(U64(what)); }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated input reading ") + what);
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace compprobe::bytes

#endif  // COMPPROBE_SRC_BYTES_H_
