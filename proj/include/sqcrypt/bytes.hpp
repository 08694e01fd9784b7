#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqcrypt/error.hpp"

namespace sqcrypt {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Key32 = std::array<std::uint8_t, 32>;

std::string toHex(ByteView bytes);
Bytes fromHex(std::string_view hex);

inline ByteView asBytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Canonical little-endian writer used by every wire format in the library.
// Length prefixes are u32 LE unless a format says otherwise.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
  }
  ByteWriter& u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  ByteWriter& u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  ByteWriter& u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }
  ByteWriter& raw(ByteView v) {
    out_.insert(out_.end(), v.begin(), v.end());
    return *this;
  }
  ByteWriter& prefixed(ByteView v) {
    u32(static_cast<std::uint32_t>(v.size()));
    return raw(v);
  }

  Bytes take() { return std::move(out_); }
  std::size_t size() const { return out_.size(); }

 private:
  Bytes out_;
};

// Bounds-checked reader. Truncation and trailing garbage raise `onError`, so
// each format can report its own error code.
class ByteReader {
 public:
  ByteReader(ByteView in, Errc onError) : in_(in), err_(onError) {}

  std::uint8_t u8() { return need(1)[0]; }
  std::uint16_t u16() {
    auto b = need(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    auto b = need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint64_t u64() {
    auto b = need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  ByteView raw(std::size_t n) { return need(n); }
  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    auto b = need(N);
    std::array<std::uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
  }
  ByteView prefixed() { return need(u32()); }

  bool empty() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }
  void expectEnd() const {
    if (!empty()) throw Error(err_, "trailing bytes");
  }
  [[noreturn]] void fail(const char* what) const { throw Error(err_, what); }

 private:
  ByteView need(std::size_t n) {
    if (n > remaining()) throw Error(err_, "truncated input");
    auto v = in_.subspan(pos_, n);
    pos_ += n;
    return v;
  }

  ByteView in_;
  std::size_t pos_ = 0;
  Errc err_;
};

}  // namespace sqcrypt
