#pragma once

#include <utility>

#include "sqcrypt/qhw.hpp"

// Semi-quantum tokenized signatures, receiver-first single round:
//   sender: sk -> pk (public); receiver: pk -> (token, tag);
//   sender: (sk, pk, tag) -> ek; receiver signs one bit with the token.
namespace sqcrypt::cqtok {

using qhw::QuantumHardware;
using qhw::Subspace;
using qhw::TokenHandle;

inline constexpr std::uint8_t kWireVersion = 1;

struct TokenSecretKey {
  Subspace mS;
  Key32 padKey{};

  static TokenSecretKey generate(Csprng& rng, std::size_t lambda);
  std::size_t lambda() const { return mS.ambient(); }
};

struct TokenPublicKey {
  std::uint16_t lambda = 0;
  Bytes encSubspace;  // RREF rows of S under the pad
  Bytes encPad;       // sealed pad key

  Bytes encode() const;
  static TokenPublicKey decode(ByteView b);  // MalformedPk
  friend bool operator==(const TokenPublicKey&, const TokenPublicKey&) = default;
};

struct TokenTag {
  Bytes encOffsets;
  friend bool operator==(const TokenTag&, const TokenTag&) = default;
};

// Accepts v iff v ⊕ offset lies in the row space of basis.
struct CosetChecker {
  Subspace basis;
  Gf2Vec offset;

  bool operator()(const Gf2Vec& v) const { return v.size() == offset.size() && basis.contains(v ^ offset); }
  friend bool operator==(const CosetChecker&, const CosetChecker&) = default;
};

struct EvalKey {
  CosetChecker checkerA;     // S_0 + x
  CosetChecker checkerB;     // S_0 + w + x
  CosetChecker checkerPerp;  // S⊥ + z

  std::size_t lambda() const { return checkerA.offset.size(); }
  Bytes encode() const;
  static EvalKey decode(ByteView b);  // MalformedMessage
  friend bool operator==(const EvalKey&, const EvalKey&) = default;
};

using Signature = Gf2Vec;

// u16 λ ∥ packed bits.
Bytes encodeSignature(const Signature& s);
Signature decodeSignature(ByteView b);  // MalformedMessage

TokenPublicKey tokSetup(const TokenSecretKey& sk);
std::pair<TokenHandle, TokenTag> tokRec(const TokenPublicKey& pk, Csprng& rng, QuantumHardware& hw);
EvalKey tokSen(const TokenSecretKey& sk, const TokenPublicKey& pk, const TokenTag& tag);
Signature tokSign(const TokenPublicKey& pk, const EvalKey& ek, TokenHandle h, bool b, QuantumHardware& hw,
                  Csprng& rng);
bool tokCV(const TokenPublicKey& pk, const EvalKey& ek, const Signature& sigma, bool b);

// Sender-side tag construction for arbitrary offsets (tests and adversaries).
TokenTag sealTag(const TokenSecretKey& sk, const Gf2Vec& x, const Gf2Vec& z, Csprng& rng);
std::pair<Gf2Vec, Gf2Vec> openTag(const TokenSecretKey& sk, const TokenTag& tag);

}  // namespace sqcrypt::cqtok
