#pragma once

#include <vector>

#include "sqcrypt/cqtok.hpp"

// w-fold repetition of the token scheme with majority verification.
namespace sqcrypt::ftlift {

using cqtok::EvalKey;
using cqtok::QuantumHardware;
using cqtok::Signature;
using cqtok::TokenHandle;
using cqtok::TokenPublicKey;
using cqtok::TokenSecretKey;
using cqtok::TokenTag;

// Pr[Bin(w, p) <= k], summed in log space.
double binomialTail(std::uint64_t w, double p, std::uint64_t k);
// Pr[at most floor(w/2) of w copies succeed] at per-copy success 1/2 + delta.
double majorityFailure(std::uint64_t w, double delta);
// Smallest odd w the Hoeffding bound exp(-2 w delta^2) <= eps certifies.
std::uint64_t hoeffdingW(double delta, double eps);

struct FTParams {
  std::uint32_t w = 1;
  double delta = 0.5;
  double epsTok = 0.0;
  double tail = 0.0;  // majorityFailure(w, delta)
};

// Minimal odd w with majorityFailure(w, delta) <= epsTok.
FTParams ftParams(double delta, double epsTok);
// Fixed-w parameters, for callers that choose w directly.
FTParams ftParamsForW(std::uint32_t w, double delta = 0.5);

bool majority(const std::vector<bool>& verdicts);

struct FTSecretKey {
  std::vector<TokenSecretKey> parts;
  static FTSecretKey generate(Csprng& rng, std::size_t w, std::size_t lambda);
};

struct FTPublicKey {
  std::vector<TokenPublicKey> parts;
  Bytes encode() const;
  static FTPublicKey decode(ByteView b);  // MalformedPk
  friend bool operator==(const FTPublicKey&, const FTPublicKey&) = default;
};

struct FTToken {
  std::vector<TokenHandle> handles;
};

struct FTTag {
  std::vector<TokenTag> parts;
  Bytes encode() const;
  static FTTag decode(ByteView b);  // TagDecodeFailure
  friend bool operator==(const FTTag&, const FTTag&) = default;
};

struct FTEvalKey {
  std::vector<EvalKey> parts;
  Bytes encode() const;
  static FTEvalKey decode(ByteView b);  // MalformedMessage
  friend bool operator==(const FTEvalKey&, const FTEvalKey&) = default;
};

// Wire form: u16 w, then w length-prefixed component signatures.
struct FTSignature {
  std::vector<Signature> parts;
  Bytes encode() const;
  static FTSignature decode(ByteView b);  // MalformedMessage
  friend bool operator==(const FTSignature&, const FTSignature&) = default;
};

FTPublicKey ftSetup(const FTSecretKey& sk);
std::pair<FTToken, FTTag> ftRec(const FTPublicKey& pk, Csprng& rng, QuantumHardware& hw);
FTEvalKey ftSen(const FTSecretKey& sk, const FTPublicKey& pk, const FTTag& tag);
// Consumes every live copy. If any copy was already used the whole token is
// void and AlreadyConsumed is raised after the rest are consumed.
FTSignature ftSign(const FTParams& params, const FTEvalKey& ek, const FTToken& tok, bool b, QuantumHardware& hw,
                   Csprng& rng);
// ftSign without the width checks; the receiver may not hold ek.
FTSignature signAllCopies(const FTToken& tok, bool b, QuantumHardware& hw, Csprng& rng);
bool ftCV(const FTParams& params, const FTPublicKey& pk, const FTEvalKey& ek, const FTSignature& sig, bool b);

}  // namespace sqcrypt::ftlift
