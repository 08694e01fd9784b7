#pragma once

#include <initializer_list>
#include <string_view>

#include "sqcrypt/bytes.hpp"
#include "sqcrypt/progvm.hpp"
#include "sqcrypt/rng.hpp"

// Soundness of the one-time programs built on top assumes the program family
// leaks no computational entropy about its embedded secret key given the
// program and public aux. Nothing here checks that; it is on the caller.

namespace sqcrypt::crypt {

using PrfKey = Key32;

// Keyed BLAKE2b-256 over the 8-byte big-endian index.
Key32 prf(const PrfKey& k, std::uint64_t index);
// Keyed BLAKE2b-256 over an arbitrary label.
Key32 prf(const PrfKey& k, ByteView label);

// Unkeyed BLAKE2b-256 of label ∥ parts (each part u32 length-prefixed).
Key32 hashLabeled(std::string_view label, std::initializer_list<ByteView> parts);

// ChaCha20 keystream of `len` bytes under `key`, zero nonce.
Bytes keystream(const Key32& key, std::size_t len);

struct MasterKeypair {
  Key32 msk{};
  Key32 mpk{};
};

using SealedPayload = Bytes;

inline constexpr std::uint8_t kSealVersion = 1;

MasterKeypair pkGen(Csprng& rng);
// X25519 KEM plus XChaCha20-Poly1305. Wire form: version ∥ u32 LE length ∥
// ephemeral public key ∥ 24-byte nonce ∥ ciphertext with tag.
SealedPayload pkEncrypt(const Key32& mpk, ByteView plaintext, Csprng& rng);
// Throws IntegrityFailure on any parse, key or authentication failure.
Bytes pkDecrypt(const Key32& msk, ByteView sealed);

struct Triple {
  Program program;
  Bytes pk;
  Bytes ek;

  friend bool operator==(const Triple&, const Triple&) = default;
};

SealedPayload sealTriple(const Key32& mpk, const Program& p, ByteView pk, ByteView ek, Csprng& rng);
Triple openTriple(const Key32& msk, ByteView sealed);

}  // namespace sqcrypt::crypt
