#include "sqcrypt/qhw.hpp"

#include <sodium.h>

#include "sqcrypt/crypt.hpp"

namespace sqcrypt::qhw {

Subspace sampleSubspace(Csprng& rng, std::size_t lambda) {
  require(lambda >= 4 && lambda % 2 == 0 && lambda <= Gf2Vec::kMaxBits, Errc::PreconditionViolated,
          "lambda must be even, 4..256");
  const std::size_t half = lambda / 2;
  // Rejection on rank deficiency keeps the distribution uniform over subspaces.
  for (;;) {
    std::vector<Gf2Vec> rows;
    rows.reserve(half);
    for (std::size_t i = 0; i < half; ++i) rows.push_back(Gf2Vec::random(lambda, rng));
    Subspace s(lambda, rows);
    if (s.dim() == half) return s;
  }
}

Subspace perp(const Subspace& s) { return s.orthogonalComplement(); }

QuantumHardware::QuantumHardware(double pFail) : pFail_(0.0) { setPFail(pFail); }

void QuantumHardware::setPFail(double p) {
  require(p >= 0.0 && p < 1.0, Errc::PreconditionViolated, "pFail must lie in [0, 1)");
  pFail_.store(p);
}

TokenHandle QuantumHardware::prepare(Subspace s, Gf2Vec x, Gf2Vec z) {
  require(x.size() == s.ambient() && z.size() == s.ambient(), Errc::PreconditionViolated, "offset width");
  std::lock_guard lock(mu_);
  const std::uint64_t id = nextId_++;
  states_.emplace(id, TokenState{std::move(s), x, z, pFail_.load()});
  return TokenHandle{id};
}

std::optional<TokenState> QuantumHardware::tryTake(TokenHandle h) {
  std::lock_guard lock(mu_);
  auto it = states_.find(h.id);
  if (it == states_.end()) return std::nullopt;
  TokenState st = std::move(it->second);
  states_.erase(it);
  ++measured_;
  return st;
}

TokenState QuantumHardware::take(TokenHandle h) {
  if (auto st = tryTake(h)) return std::move(*st);
  std::lock_guard lock(mu_);
  if (h.id != 0 && h.id < nextId_) throw Error(Errc::AlreadyConsumed, "token already consumed");
  throw Error(Errc::UnknownHandle, "no such token");
}

Gf2Vec QuantumHardware::measure(const TokenState& st, bool hadamard, Csprng& rng) {
  if (rng.bernoulli(st.pFail)) return Gf2Vec::random(st.s.ambient(), rng);
  return hadamard ? st.s.randomOrthogonalElement(rng) ^ st.z : st.s.randomElement(rng) ^ st.x;
}

Gf2Vec QuantumHardware::measureComputational(TokenHandle h, Csprng& rng) { return measure(take(h), false, rng); }

Gf2Vec QuantumHardware::measureHadamard(TokenHandle h, Csprng& rng) { return measure(take(h), true, rng); }

std::optional<Gf2Vec> QuantumHardware::tryMeasure(TokenHandle h, bool hadamard, Csprng& rng) {
  auto st = tryTake(h);
  if (!st) return std::nullopt;
  return measure(*st, hadamard, rng);
}

void QuantumHardware::discard(TokenHandle h) {
  std::lock_guard lock(mu_);
  states_.erase(h.id);
}

bool QuantumHardware::isLive(TokenHandle h) const {
  std::lock_guard lock(mu_);
  return states_.count(h.id) != 0;
}

std::size_t QuantumHardware::liveCount() const {
  std::lock_guard lock(mu_);
  return states_.size();
}

std::uint64_t QuantumHardware::preparedCount() const {
  std::lock_guard lock(mu_);
  return nextId_ - 1;
}

std::uint64_t QuantumHardware::measuredCount() const {
  std::lock_guard lock(mu_);
  return measured_;
}

std::optional<TokenState> QuantumHardware::inspect(TokenHandle h) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(h.id);
  if (it == states_.end()) return std::nullopt;
  return it->second;
}

std::pair<TokenHandle, Bytes> QuantumHardware::homomorphicPrepare(ByteView encSubspace, ByteView encPad,
                                                                  std::size_t lambda, Csprng& rng) {
  const Key32 padKey = openPad(encPad);
  Subspace s = unpadSubspace(encSubspace, lambda, padKey);
  const Gf2Vec x = Gf2Vec::random(lambda, rng);
  const Gf2Vec z = Gf2Vec::random(lambda, rng);
  Bytes tag = sealOffsets(padKey, lambda, x, z, rng);
  return {prepare(std::move(s), x, z), std::move(tag)};
}

namespace {

constexpr std::size_t kAeadNonce = crypto_aead_chacha20poly1305_ietf_NPUBBYTES;
constexpr std::size_t kAeadTag = crypto_aead_chacha20poly1305_ietf_ABYTES;

const Key32& deviceKey() {
  static const Key32 k = crypt::hashLabeled("sqcrypt/qhe/device", {});
  return k;
}

std::size_t rowBytes(std::size_t lambda) { return (lambda + 7) / 8; }

}  // namespace

Bytes sealPad(const Key32& padKey) {
  ensureSodium();
  // Deterministic nonce so token setup stays a deterministic function of sk.
  const Key32 n = crypt::hashLabeled("sqcrypt/qhe/pad-nonce", {padKey});
  Bytes out(kAeadNonce + padKey.size() + kAeadTag);
  std::copy_n(n.begin(), kAeadNonce, out.begin());
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data() + kAeadNonce, &clen, padKey.data(), padKey.size(), nullptr, 0,
                                            nullptr, out.data(), deviceKey().data());
  return out;
}

Key32 openPad(ByteView encPad) {
  ensureSodium();
  if (encPad.size() != kAeadNonce + 32 + kAeadTag) throw Error(Errc::MalformedPk, "pad capsule length");
  Key32 padKey{};
  unsigned long long plen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(padKey.data(), &plen, nullptr, encPad.data() + kAeadNonce,
                                                encPad.size() - kAeadNonce, nullptr, 0, encPad.data(),
                                                deviceKey().data()) != 0)
    throw Error(Errc::MalformedPk, "pad capsule does not open");
  return padKey;
}

Bytes padSubspace(const Subspace& s, const Key32& padKey) {
  const std::size_t rb = rowBytes(s.ambient());
  Bytes out(s.dim() * rb);
  for (std::size_t i = 0; i < s.dim(); ++i) s.rows()[i].packTo(out.data() + i * rb);
  const Bytes ks = crypt::keystream(crypt::hashLabeled("sqcrypt/qhe/pad.matrix", {padKey}), out.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= ks[i];
  return out;
}

Subspace unpadSubspace(ByteView enc, std::size_t lambda, const Key32& padKey) {
  if (lambda < 4 || lambda % 2 != 0 || lambda > Gf2Vec::kMaxBits) throw Error(Errc::MalformedPk, "bad lambda");
  const std::size_t rb = rowBytes(lambda), half = lambda / 2;
  if (enc.size() != half * rb) throw Error(Errc::MalformedPk, "padded matrix length");
  const Bytes ks = crypt::keystream(crypt::hashLabeled("sqcrypt/qhe/pad.matrix", {padKey}), enc.size());
  std::vector<Gf2Vec> rows;
  rows.reserve(half);
  Bytes plain(enc.begin(), enc.end());
  for (std::size_t j = 0; j < plain.size(); ++j) plain[j] ^= ks[j];
  try {
    for (std::size_t i = 0; i < half; ++i) rows.push_back(Gf2Vec::unpack(ByteView(plain).subspan(i * rb, rb), lambda));
  } catch (const Error&) {
    throw Error(Errc::MalformedPk, "padded matrix does not decode");
  }
  Subspace s(lambda, rows);
  if (s.dim() != half || s.rows() != rows) throw Error(Errc::MalformedPk, "padded matrix not canonical");
  return s;
}

Bytes sealOffsets(const Key32& padKey, std::size_t lambda, const Gf2Vec& x, const Gf2Vec& z, Csprng& rng) {
  ensureSodium();
  const Key32 tagKey = crypt::hashLabeled("sqcrypt/qhe/tag", {padKey});
  ByteWriter pt;
  pt.raw(x.pack()).raw(z.pack());
  const Bytes plain = pt.take();

  ByteWriter head;
  head.u8(kTagVersion).u16(static_cast<std::uint16_t>(lambda));
  const Bytes ad = head.take();
  std::array<std::uint8_t, kAeadNonce> nonce{};
  rng.fill(nonce);
  Bytes ct(plain.size() + kAeadTag);
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(ct.data(), &clen, plain.data(), plain.size(), ad.data(), ad.size(),
                                            nullptr, nonce.data(), tagKey.data());
  ByteWriter w;
  w.raw(ad).raw(nonce).raw(ct);
  return w.take();
}

std::pair<Gf2Vec, Gf2Vec> openOffsets(const Key32& padKey, std::size_t lambda, ByteView tag) {
  ensureSodium();
  ByteReader r(tag, Errc::TagDecodeFailure);
  if (r.u8() != kTagVersion) r.fail("unknown tag version");
  if (r.u16() != lambda) r.fail("tag lambda mismatch");
  auto nonce = r.array<kAeadNonce>();
  const std::size_t rb = rowBytes(lambda);
  ByteView ct = r.raw(2 * rb + kAeadTag);
  r.expectEnd();
  const Key32 tagKey = crypt::hashLabeled("sqcrypt/qhe/tag", {padKey});
  Bytes plain(2 * rb);
  unsigned long long plen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(plain.data(), &plen, nullptr, ct.data(), ct.size(), tag.data(), 3,
                                                nonce.data(), tagKey.data()) != 0)
    r.fail("tag authentication failed");
  try {
    return {Gf2Vec::unpack(ByteView(plain).first(rb), lambda), Gf2Vec::unpack(ByteView(plain).subspan(rb), lambda)};
  } catch (const Error&) {
    r.fail("tag offsets do not decode");
  }
}

}  // namespace sqcrypt::qhw
