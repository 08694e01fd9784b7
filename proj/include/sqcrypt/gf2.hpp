#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "sqcrypt/bytes.hpp"

namespace sqcrypt {

class Csprng;

// Vector over GF(2) of at most 256 coordinates, stored inline.
class Gf2Vec {
 public:
  static constexpr std::size_t kMaxBits = 256;

  Gf2Vec() = default;
  explicit Gf2Vec(std::size_t bits);

  static Gf2Vec random(std::size_t bits, Csprng& rng);
  static Gf2Vec unit(std::size_t bits, std::size_t index);
  static Gf2Vec fromString(std::string_view s);
  // MSB-first packing, ceil(bits/8) bytes.
  static Gf2Vec unpack(ByteView packed, std::size_t bits);

  std::size_t size() const { return bits_; }
  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  Gf2Vec& operator^=(const Gf2Vec& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] ^= o.words_[k];
    return *this;
  }
  friend Gf2Vec operator^(Gf2Vec a, const Gf2Vec& b) { return a ^= b; }

  // Inner product mod 2.
  bool dot(const Gf2Vec& o) const {
    unsigned parity = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) parity ^= std::popcount(words_[k] & o.words_[k]) & 1U;
    return parity != 0;
  }
  // Number of coordinates set in both.
  std::size_t andCount(const Gf2Vec& o) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) c += static_cast<std::size_t>(std::popcount(words_[k] & o.words_[k]));
    return c;
  }
  bool isZero() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }
  // Index of the lowest set coordinate; size() when zero.
  std::size_t lowestSet() const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k]) return k * 64 + static_cast<std::size_t>(std::countr_zero(words_[k]));
    return bits_;
  }

  Bytes pack() const;
  // Writes ceil(size()/8) bytes to out.
  void packTo(std::uint8_t* out) const;
  std::string toString() const;

  friend bool operator==(const Gf2Vec&, const Gf2Vec&) = default;
  friend auto operator<=>(const Gf2Vec&, const Gf2Vec&) = default;

 private:
  std::array<std::uint64_t, 4> words_{};
  std::uint16_t bits_ = 0;
};

// Row space of a GF(2) matrix, kept in reduced row echelon form: each row's
// pivot is its lowest set coordinate, rows are sorted by pivot, and every
// pivot column is zero outside its own row. Equal spaces compare equal.
class RowSpace {
 public:
  RowSpace() = default;
  RowSpace(std::size_t ambient, const std::vector<Gf2Vec>& generators);

  std::size_t ambient() const { return ambient_; }
  std::size_t dim() const { return rows_.size(); }
  const std::vector<Gf2Vec>& rows() const { return rows_; }

  bool contains(Gf2Vec v) const;
  Gf2Vec reduce(Gf2Vec v) const;
  // Sum of the rows selected by the low dim() bits of `coeffs`.
  Gf2Vec combine(const Gf2Vec& coeffs) const;
  Gf2Vec randomElement(Csprng& rng) const;
  // Uniform element of the orthogonal complement, without building it.
  Gf2Vec randomOrthogonalElement(Csprng& rng) const;
  RowSpace orthogonalComplement() const;
  // A copy without the first RREF row.
  RowSpace withoutFirstRow() const;

  // u16 ambient, u16 dim, then dim rows of ceil(ambient/8) bytes (row-major,
  // MSB-first). Decoding re-reduces and rejects non-canonical input.
  void encode(ByteWriter& w) const;
  static RowSpace decode(ByteReader& r);

  friend bool operator==(const RowSpace&, const RowSpace&) = default;

 private:
  std::size_t ambient_ = 0;
  std::vector<Gf2Vec> rows_;
  std::vector<std::uint16_t> pivots_;
};

}  // namespace sqcrypt
