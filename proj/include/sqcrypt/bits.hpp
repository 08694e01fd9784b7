#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sqcrypt/bytes.hpp"

namespace sqcrypt {

// Classical bit string, one element per bit. Packing is MSB-first: bit 0 is
// the high bit of byte 0. Integer views are big-endian, so "0001" is 1.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n) : bits_(n, 0) {}

  static BitString fromString(std::string_view s);
  static BitString fromUint(std::uint64_t value, std::size_t width);
  static BitString fromBytes(ByteView bytes);
  static BitString unpack(ByteView packed, std::size_t width);

  std::size_t size() const { return bits_.size(); }
  bool empty() const { return bits_.empty(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
  void push_back(bool v) { bits_.push_back(v ? 1 : 0); }
  void append(const BitString& other) { bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end()); }

  BitString slice(std::size_t from, std::size_t count) const;
  std::uint64_t toUint() const;
  Bytes pack() const;
  Bytes toBytes() const;  // requires size % 8 == 0
  std::string toString() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

inline BitString BitString::fromString(std::string_view s) {
  BitString out;
  for (char c : s) {
    if (c != '0' && c != '1') throw Error(Errc::PreconditionViolated, "bit string must be 0/1");
    out.push_back(c == '1');
  }
  return out;
}

inline BitString BitString::fromUint(std::uint64_t value, std::size_t width) {
  BitString out(width);
  for (std::size_t i = 0; i < width; ++i) {
    std::size_t shift = width - 1 - i;
    out.set(i, shift < 64 && ((value >> shift) & 1U));
  }
  return out;
}

inline BitString BitString::fromBytes(ByteView bytes) { return unpack(bytes, bytes.size() * 8); }

inline BitString BitString::unpack(ByteView packed, std::size_t width) {
  if (packed.size() * 8 < width) throw Error(Errc::MalformedMessage, "packed bits too short");
  BitString out(width);
  for (std::size_t i = 0; i < width; ++i) out.set(i, (packed[i / 8] >> (7 - i % 8)) & 1U);
  return out;
}

inline BitString BitString::slice(std::size_t from, std::size_t count) const {
  BitString out;
  out.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(from),
                   bits_.begin() + static_cast<std::ptrdiff_t>(from + count));
  return out;
}

inline std::uint64_t BitString::toUint() const {
  std::uint64_t v = 0;
  for (auto b : bits_) v = (v << 1) | b;
  return v;
}

inline Bytes BitString::pack() const {
  Bytes out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80U >> (i % 8));
  return out;
}

inline Bytes BitString::toBytes() const {
  if (bits_.size() % 8 != 0) throw Error(Errc::PreconditionViolated, "bit length not a byte multiple");
  return pack();
}

inline std::string BitString::toString() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

}  // namespace sqcrypt
