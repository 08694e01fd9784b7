#include "sqcrypt/cqtok.hpp"

namespace sqcrypt::cqtok {

TokenSecretKey TokenSecretKey::generate(Csprng& rng, std::size_t lambda) {
  TokenSecretKey sk;
  sk.mS = qhw::sampleSubspace(rng, lambda);
  sk.padKey = rng.key32();
  return sk;
}

Bytes TokenPublicKey::encode() const {
  ByteWriter w;
  w.u8(kWireVersion).u16(lambda).prefixed(encSubspace).prefixed(encPad);
  return w.take();
}

TokenPublicKey TokenPublicKey::decode(ByteView b) {
  ByteReader r(b, Errc::MalformedPk);
  if (r.u8() != kWireVersion) r.fail("unknown pk version");
  TokenPublicKey pk;
  pk.lambda = r.u16();
  ByteView s = r.prefixed();
  ByteView p = r.prefixed();
  r.expectEnd();
  pk.encSubspace.assign(s.begin(), s.end());
  pk.encPad.assign(p.begin(), p.end());
  return pk;
}

namespace {

void encodeChecker(ByteWriter& w, const CosetChecker& c) {
  c.basis.encode(w);
  w.raw(c.offset.pack());
}

CosetChecker decodeChecker(ByteReader& r, std::size_t lambda) {
  CosetChecker c;
  c.basis = RowSpace::decode(r);
  if (c.basis.ambient() != lambda) r.fail("checker width mismatch");
  c.offset = Gf2Vec::unpack(r.raw((lambda + 7) / 8), lambda);
  return c;
}

}  // namespace

Bytes EvalKey::encode() const {
  ByteWriter w;
  w.u8(kWireVersion).u16(static_cast<std::uint16_t>(lambda()));
  encodeChecker(w, checkerA);
  encodeChecker(w, checkerB);
  encodeChecker(w, checkerPerp);
  return w.take();
}

EvalKey EvalKey::decode(ByteView b) {
  ByteReader r(b, Errc::MalformedMessage);
  if (r.u8() != kWireVersion) r.fail("unknown ek version");
  const std::size_t lambda = r.u16();
  if (lambda == 0 || lambda > Gf2Vec::kMaxBits) r.fail("bad lambda");
  EvalKey ek;
  ek.checkerA = decodeChecker(r, lambda);
  ek.checkerB = decodeChecker(r, lambda);
  ek.checkerPerp = decodeChecker(r, lambda);
  r.expectEnd();
  return ek;
}

Bytes encodeSignature(const Signature& s) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(s.size())).raw(s.pack());
  return w.take();
}

Signature decodeSignature(ByteView b) {
  ByteReader r(b, Errc::MalformedMessage);
  const std::size_t lambda = r.u16();
  if (lambda == 0 || lambda > Gf2Vec::kMaxBits) r.fail("bad signature width");
  Signature s = Gf2Vec::unpack(r.raw((lambda + 7) / 8), lambda);
  r.expectEnd();
  return s;
}

TokenPublicKey tokSetup(const TokenSecretKey& sk) {
  TokenPublicKey pk;
  pk.lambda = static_cast<std::uint16_t>(sk.lambda());
  pk.encSubspace = qhw::padSubspace(sk.mS, sk.padKey);
  pk.encPad = qhw::sealPad(sk.padKey);
  return pk;
}

std::pair<TokenHandle, TokenTag> tokRec(const TokenPublicKey& pk, Csprng& rng, QuantumHardware& hw) {
  auto [handle, tag] = hw.homomorphicPrepare(pk.encSubspace, pk.encPad, pk.lambda, rng);
  return {handle, TokenTag{std::move(tag)}};
}

EvalKey tokSen(const TokenSecretKey& sk, const TokenPublicKey& pk, const TokenTag& tag) {
  require(pk.lambda == sk.lambda(), Errc::PreconditionViolated, "pk was not set up from this sk");
  auto [x, z] = openTag(sk, tag);
  if (sk.mS.contains(x)) throw Error(Errc::XInSubspaceAbort, "x lies in S; interaction terminated");
  const Gf2Vec& w = sk.mS.rows().front();
  const Subspace s0 = sk.mS.withoutFirstRow();
  return EvalKey{{s0, x}, {s0, w ^ x}, {qhw::perp(sk.mS), z}};
}

Signature tokSign(const TokenPublicKey&, const EvalKey&, TokenHandle h, bool b, QuantumHardware& hw, Csprng& rng) {
  return b ? hw.measureHadamard(h, rng) : hw.measureComputational(h, rng);
}

bool tokCV(const TokenPublicKey& pk, const EvalKey& ek, const Signature& sigma, bool b) {
  if (sigma.size() != pk.lambda || ek.lambda() != pk.lambda) return false;
  return b ? ek.checkerPerp(sigma) : (ek.checkerA(sigma) || ek.checkerB(sigma));
}

TokenTag sealTag(const TokenSecretKey& sk, const Gf2Vec& x, const Gf2Vec& z, Csprng& rng) {
  return TokenTag{qhw::sealOffsets(sk.padKey, sk.lambda(), x, z, rng)};
}

std::pair<Gf2Vec, Gf2Vec> openTag(const TokenSecretKey& sk, const TokenTag& tag) {
  return qhw::openOffsets(sk.padKey, sk.lambda(), tag.encOffsets);
}

}  // namespace sqcrypt::cqtok
