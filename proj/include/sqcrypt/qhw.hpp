#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>

#include "sqcrypt/gf2.hpp"
#include "sqcrypt/rng.hpp"

// Simulated consumable quantum hardware. Token states are held symbolically
// as (S, x, z); a handle yields exactly one measurement and is then gone.
namespace sqcrypt::qhw {

using Subspace = RowSpace;

// Uniform λ/2-dimensional subspace of F_2^λ in canonical form.
Subspace sampleSubspace(Csprng& rng, std::size_t lambda);
Subspace perp(const Subspace& s);

struct TokenHandle {
  std::uint64_t id = 0;
  friend bool operator==(TokenHandle, TokenHandle) = default;
};

struct TokenState {
  Subspace s;
  Gf2Vec x;
  Gf2Vec z;
  double pFail = 0.0;
};

class QuantumHardware {
 public:
  explicit QuantumHardware(double pFail = 0.0);
  QuantumHardware(const QuantumHardware&) = delete;
  QuantumHardware& operator=(const QuantumHardware&) = delete;

  double pFail() const { return pFail_.load(); }
  void setPFail(double p);

  // Registers |S⟩ shifted by (x, z) with the current noise level.
  TokenHandle prepare(Subspace s, Gf2Vec x, Gf2Vec z);

  // Both consume the handle. With probability pFail the result is a
  // uniform λ-bit vector instead of a coset element.
  Gf2Vec measureComputational(TokenHandle h, Csprng& rng);
  Gf2Vec measureHadamard(TokenHandle h, Csprng& rng);
  // Same, but nullopt for a spent or unknown handle instead of throwing.
  std::optional<Gf2Vec> tryMeasure(TokenHandle h, bool hadamard, Csprng& rng);
  // Destroys the state without a measurement.
  void discard(TokenHandle h);

  bool isLive(TokenHandle h) const;
  std::size_t liveCount() const;
  std::uint64_t preparedCount() const;
  std::uint64_t measuredCount() const;

  // Test instrumentation only; protocol code never calls this.
  std::optional<TokenState> inspect(TokenHandle h) const;

  // Receiver-side evaluation of the sender's encrypted circuit: unpads the
  // subspace inside the device, draws (x, z), registers the state and
  // returns it with the offsets sealed for the holder of the pad key.
  std::pair<TokenHandle, Bytes> homomorphicPrepare(ByteView encSubspace, ByteView encPad, std::size_t lambda,
                                                   Csprng& rng);

 private:
  TokenState take(TokenHandle h);
  std::optional<TokenState> tryTake(TokenHandle h);
  static Gf2Vec measure(const TokenState& st, bool hadamard, Csprng& rng);

  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, TokenState> states_;
  std::uint64_t nextId_ = 1;
  std::uint64_t measured_ = 0;
  std::atomic<double> pFail_;
};

// Pad stand-in for the homomorphic encryption layer. The pad key is sealed
// under a key that only the hardware and the sender's tooling hold.
Bytes sealPad(const Key32& padKey);
Key32 openPad(ByteView encPad);  // throws MalformedPk
Bytes padSubspace(const Subspace& s, const Key32& padKey);
Subspace unpadSubspace(ByteView enc, std::size_t lambda, const Key32& padKey);  // throws MalformedPk

// Tag wire form: version ∥ u16 λ ∥ 12-byte nonce ∥ AEAD(x ∥ z).
inline constexpr std::uint8_t kTagVersion = 1;
Bytes sealOffsets(const Key32& padKey, std::size_t lambda, const Gf2Vec& x, const Gf2Vec& z, Csprng& rng);
std::pair<Gf2Vec, Gf2Vec> openOffsets(const Key32& padKey, std::size_t lambda, ByteView tag);  // TagDecodeFailure

}  // namespace sqcrypt::qhw
