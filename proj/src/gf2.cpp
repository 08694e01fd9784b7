#include "sqcrypt/gf2.hpp"

#include <algorithm>

#include "sqcrypt/rng.hpp"

namespace sqcrypt {

Gf2Vec::Gf2Vec(std::size_t bits) : bits_(static_cast<std::uint16_t>(bits)) {
  if (bits > kMaxBits) throw Error(Errc::PreconditionViolated, "GF(2) vector wider than 256");
}

Gf2Vec Gf2Vec::random(std::size_t bits, Csprng& rng) {
  Gf2Vec v(bits);
  for (std::size_t k = 0; k * 64 < bits; ++k) {
    std::uint64_t w = rng();
    std::size_t left = bits - k * 64;
    if (left < 64) w &= (std::uint64_t{1} << left) - 1;
    v.words_[k] = w;
  }
  return v;
}

Gf2Vec Gf2Vec::unit(std::size_t bits, std::size_t index) {
  Gf2Vec v(bits);
  v.set(index, true);
  return v;
}

Gf2Vec Gf2Vec::fromString(std::string_view s) {
  Gf2Vec v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw Error(Errc::PreconditionViolated, "bad GF(2) literal");
    v.set(i, s[i] == '1');
  }
  return v;
}

namespace {

constexpr std::array<std::uint8_t, 256> kReverse = [] {
  std::array<std::uint8_t, 256> t{};
  for (unsigned v = 0; v < 256; ++v) {
    unsigned r = 0;
    for (unsigned b = 0; b < 8; ++b) r |= ((v >> b) & 1U) << (7 - b);
    t[v] = static_cast<std::uint8_t>(r);
  }
  return t;
}();

}  // namespace

// Coordinate i lives at bit i%64 of word i/64; on the wire it is bit 7-i%8 of
// byte i/8, so each byte is a bit-reversed slice of a word.
Gf2Vec Gf2Vec::unpack(ByteView packed, std::size_t bits) {
  if (packed.size() != (bits + 7) / 8) throw Error(Errc::MalformedMessage, "packed vector length");
  Gf2Vec v(bits);
  for (std::size_t b = 0; b < packed.size(); ++b)
    v.words_[b / 8] |= static_cast<std::uint64_t>(kReverse[packed[b]]) << (8 * (b % 8));
  if (bits % 64 != 0 && (v.words_[bits / 64] >> (bits % 64)) != 0)
    throw Error(Errc::MalformedMessage, "nonzero padding bits");
  return v;
}

void Gf2Vec::packTo(std::uint8_t* out) const {
  for (std::size_t b = 0; b < (bits_ + 7U) / 8U; ++b)
    out[b] = kReverse[static_cast<std::uint8_t>(words_[b / 8] >> (8 * (b % 8)))];
}

Bytes Gf2Vec::pack() const {
  Bytes out((bits_ + 7) / 8);
  packTo(out.data());
  return out;
}

std::string Gf2Vec::toString() const {
  std::string s(bits_, '0');
  for (std::size_t i = 0; i < bits_; ++i)
    if (get(i)) s[i] = '1';
  return s;
}

RowSpace::RowSpace(std::size_t ambient, const std::vector<Gf2Vec>& generators) : ambient_(ambient) {
  rows_.reserve(std::min(ambient, generators.size()));
  pivots_.reserve(rows_.capacity());
  for (Gf2Vec v : generators) {
    if (v.size() != ambient) throw Error(Errc::PreconditionViolated, "generator width mismatch");
    v = reduce(v);
    if (v.isZero()) continue;
    const std::size_t p = v.lowestSet();
    // Clear the new pivot column from the existing rows, then insert sorted.
    for (auto& row : rows_)
      if (row.get(p)) row ^= v;
    const auto at = std::lower_bound(pivots_.begin(), pivots_.end(), p) - pivots_.begin();
    rows_.insert(rows_.begin() + at, v);
    pivots_.insert(pivots_.begin() + at, static_cast<std::uint16_t>(p));
  }
}

Gf2Vec RowSpace::reduce(Gf2Vec v) const {
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (v.get(pivots_[i])) v ^= rows_[i];
  return v;
}

bool RowSpace::contains(Gf2Vec v) const {
  if (v.size() != ambient_) return false;
  return reduce(v).isZero();
}

Gf2Vec RowSpace::combine(const Gf2Vec& coeffs) const {
  Gf2Vec out(ambient_);
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (coeffs.get(i)) out ^= rows_[i];
  return out;
}

Gf2Vec RowSpace::randomElement(Csprng& rng) const {
  if (rows_.empty()) return Gf2Vec(ambient_);
  return combine(Gf2Vec::random(rows_.size(), rng));
}

Gf2Vec RowSpace::randomOrthogonalElement(Csprng& rng) const {
  // Free coordinates are uniform; each pivot coordinate is then forced by its row.
  Gf2Vec v = Gf2Vec::random(ambient_, rng);
  for (auto p : pivots_) v.set(p, false);
  for (std::size_t i = 0; i < rows_.size(); ++i)
    if (rows_[i].dot(v)) v.set(pivots_[i], true);
  return v;
}

RowSpace RowSpace::orthogonalComplement() const {
  std::vector<bool> isPivot(ambient_, false);
  for (auto p : pivots_) isPivot[p] = true;
  // For RREF rows, each free column f yields e_f plus, at every pivot p, the
  // entry of p's row in column f.
  std::vector<Gf2Vec> gens;
  gens.reserve(ambient_ - rows_.size());
  for (std::size_t f = 0; f < ambient_; ++f) {
    if (isPivot[f]) continue;
    Gf2Vec v = Gf2Vec::unit(ambient_, f);
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (rows_[i].get(f)) v.set(pivots_[i], true);
    gens.push_back(v);
  }
  return RowSpace(ambient_, gens);
}

RowSpace RowSpace::withoutFirstRow() const {
  RowSpace out;
  out.ambient_ = ambient_;
  if (!rows_.empty()) {
    out.rows_.assign(rows_.begin() + 1, rows_.end());
    out.pivots_.assign(pivots_.begin() + 1, pivots_.end());
  }
  return out;
}

void RowSpace::encode(ByteWriter& w) const {
  w.u16(static_cast<std::uint16_t>(ambient_)).u16(static_cast<std::uint16_t>(rows_.size()));
  std::array<std::uint8_t, Gf2Vec::kMaxBits / 8> buf{};
  const std::size_t rowBytes = (ambient_ + 7) / 8;
  for (const auto& row : rows_) {
    row.packTo(buf.data());
    w.raw(ByteView(buf.data(), rowBytes));
  }
}

RowSpace RowSpace::decode(ByteReader& r) {
  const std::size_t ambient = r.u16();
  const std::size_t dim = r.u16();
  if (ambient == 0 || ambient > Gf2Vec::kMaxBits || dim > ambient) r.fail("row space shape");
  const std::size_t rowBytes = (ambient + 7) / 8;
  RowSpace out;
  out.ambient_ = ambient;
  out.rows_.reserve(dim);
  out.pivots_.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    Gf2Vec row;
    try {
      row = Gf2Vec::unpack(r.raw(rowBytes), ambient);
    } catch (const Error&) {
      r.fail("row does not decode");
    }
    const std::size_t p = row.lowestSet();
    if (p == ambient || (i > 0 && p <= out.pivots_.back())) r.fail("row space not in canonical form");
    out.rows_.push_back(row);
    out.pivots_.push_back(static_cast<std::uint16_t>(p));
  }
  // Reduced form: every pivot column is zero outside its own row.
  Gf2Vec pivotMask(ambient);
  for (auto p : out.pivots_) pivotMask.set(p, true);
  for (const auto& row : out.rows_)
    if (row.andCount(pivotMask) != 1) r.fail("row space not in canonical form");
  return out;
}

}  // namespace sqcrypt
