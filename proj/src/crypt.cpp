#include "sqcrypt/crypt.hpp"

#include <sodium.h>

namespace sqcrypt::crypt {

Key32 prf(const PrfKey& k, std::uint64_t index) {
  std::array<std::uint8_t, 8> be{};
  for (int i = 0; i < 8; ++i) be[i] = static_cast<std::uint8_t>(index >> (56 - 8 * i));
  return prf(k, be);
}

Key32 prf(const PrfKey& k, ByteView label) {
  ensureSodium();
  Key32 out{};
  crypto_generichash(out.data(), out.size(), label.data(), label.size(), k.data(), k.size());
  return out;
}

Key32 hashLabeled(std::string_view label, std::initializer_list<ByteView> parts) {
  ensureSodium();
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, 32);
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  for (auto part : parts) {
    std::array<std::uint8_t, 4> len{};
    for (int i = 0; i < 4; ++i) len[i] = static_cast<std::uint8_t>(part.size() >> (8 * i));
    crypto_generichash_update(&st, len.data(), len.size());
    crypto_generichash_update(&st, part.data(), part.size());
  }
  Key32 out{};
  crypto_generichash_final(&st, out.data(), out.size());
  return out;
}

Bytes keystream(const Key32& key, std::size_t len) {
  ensureSodium();
  Bytes out(len);
  static const std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
  if (len) crypto_stream_chacha20(out.data(), len, nonce.data(), key.data());
  return out;
}

MasterKeypair pkGen(Csprng& rng) {
  ensureSodium();
  MasterKeypair kp;
  kp.msk = rng.key32();
  crypto_scalarmult_base(kp.mpk.data(), kp.msk.data());
  return kp;
}

namespace {

constexpr std::size_t kNonce = crypto_aead_xchacha20poly1305_ietf_NPUBBYTES;
constexpr std::size_t kTag = crypto_aead_xchacha20poly1305_ietf_ABYTES;

Key32 kemKey(ByteView shared, ByteView epk, ByteView mpk) { return hashLabeled("sqcrypt/kem", {shared, epk, mpk}); }

}  // namespace

SealedPayload pkEncrypt(const Key32& mpk, ByteView plaintext, Csprng& rng) {
  require(!plaintext.empty(), Errc::PreconditionViolated, "empty plaintext");
  ensureSodium();
  Key32 esk = rng.key32();
  Key32 epk{}, shared{};
  crypto_scalarmult_base(epk.data(), esk.data());
  if (crypto_scalarmult(shared.data(), esk.data(), mpk.data()) != 0)
    throw Error(Errc::IntegrityFailure, "degenerate public key");
  const Key32 key = kemKey(shared, epk, mpk);
  sodium_memzero(esk.data(), esk.size());

  std::array<std::uint8_t, kNonce> nonce{};
  rng.fill(nonce);
  std::array<std::uint8_t, 1 + 32> ad{};
  ad[0] = kSealVersion;
  std::copy(epk.begin(), epk.end(), ad.begin() + 1);

  Bytes ct(plaintext.size() + kTag);
  unsigned long long clen = 0;
  crypto_aead_xchacha20poly1305_ietf_encrypt(ct.data(), &clen, plaintext.data(), plaintext.size(), ad.data(),
                                             ad.size(), nullptr, nonce.data(), key.data());
  ByteWriter w;
  w.u8(kSealVersion).prefixed(epk).raw(nonce).raw(ct);
  return w.take();
}

Bytes pkDecrypt(const Key32& msk, ByteView sealed) {
  ensureSodium();
  ByteReader r(sealed, Errc::IntegrityFailure);
  if (r.u8() != kSealVersion) r.fail("unknown payload version");
  ByteView epkView = r.prefixed();
  if (epkView.size() != 32) r.fail("bad KEM ciphertext length");
  Key32 epk{};
  std::copy(epkView.begin(), epkView.end(), epk.begin());
  auto nonce = r.array<kNonce>();
  ByteView ct = r.raw(r.remaining());
  if (ct.size() <= kTag) r.fail("ciphertext too short");

  Key32 shared{}, mpk{};
  crypto_scalarmult_base(mpk.data(), msk.data());
  if (crypto_scalarmult(shared.data(), msk.data(), epk.data()) != 0) r.fail("degenerate KEM ciphertext");
  const Key32 key = kemKey(shared, epk, mpk);

  std::array<std::uint8_t, 1 + 32> ad{};
  ad[0] = kSealVersion;
  std::copy(epk.begin(), epk.end(), ad.begin() + 1);
  Bytes pt(ct.size() - kTag);
  unsigned long long plen = 0;
  if (crypto_aead_xchacha20poly1305_ietf_decrypt(pt.data(), &plen, nullptr, ct.data(), ct.size(), ad.data(),
                                                 ad.size(), nonce.data(), key.data()) != 0)
    r.fail("authentication failed");
  return pt;
}

SealedPayload sealTriple(const Key32& mpk, const Program& p, ByteView pk, ByteView ek, Csprng& rng) {
  ByteWriter w;
  w.prefixed(progvm::encodeProgram(p)).prefixed(pk).prefixed(ek);
  return pkEncrypt(mpk, w.take(), rng);
}

Triple openTriple(const Key32& msk, ByteView sealed) {
  const Bytes pt = pkDecrypt(msk, sealed);
  ByteReader r(pt, Errc::IntegrityFailure);
  Triple t;
  ByteView prog = r.prefixed();
  ByteView pk = r.prefixed();
  ByteView ek = r.prefixed();
  r.expectEnd();
  // Authenticated plaintext that fails to parse still means a bad payload.
  try {
    t.program = progvm::decodeProgram(prog);
  } catch (const Error&) {
    throw Error(Errc::IntegrityFailure, "sealed program does not decode");
  }
  t.pk.assign(pk.begin(), pk.end());
  t.ek.assign(ek.begin(), ek.end());
  return t;
}

}  // namespace sqcrypt::crypt
