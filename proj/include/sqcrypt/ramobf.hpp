#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sqcrypt/cotp.hpp"

// RAM programs as chains of one-time programs: each round's program runs P
// once and plays the sender for the next round.
namespace sqcrypt::ramobf {

using cotp::GlobalSetup;
using cotp::PkBundle;
using cotp::QuantumHardware;
using progvm::RamImage;

struct ChainParams {
  std::uint16_t lambda = 64;
  std::uint16_t w = 1;
  // Width of the next-round tag digest appended to every signed input.
  std::uint16_t bindBits = 32;

  friend bool operator==(const ChainParams&, const ChainParams&) = default;
};

struct RecursiveWrapper {
  Program inner;
  crypt::PrfKey chainKey{};
  std::uint64_t round = 0;
  RamImage ram;
  Key32 mpk{};
  ChainParams params;

  std::uint16_t inputBits() const { return static_cast<std::uint16_t>(inner.nInputBits + params.bindBits); }
  Bytes encode() const;
  static RecursiveWrapper decode(ByteView b);  // MalformedProgram
  Program toProgram() const;
  static RecursiveWrapper fromProgram(const Program& p);
  friend bool operator==(const RecursiveWrapper&, const RecursiveWrapper&) = default;
};

// Round-j OTP key material, derived from prf(chainKey, j).
cotp::OtpSecretKey roundKey(const crypt::PrfKey& chainKey, std::uint64_t j, std::uint16_t n, const ChainParams& params);

// Digest of the encoded next-round tags, as bindBits input bits.
BitString bindDigest(ByteView nextTags, std::uint16_t bits);

// Runs inside the oracle once the round's signatures have verified.
cotp::OracleAnswer evalWrapper(const RecursiveWrapper& w, const BitString& x, ByteView nextTags, Csprng& rng);

// JSONL audit log: {round, direction, messageType, byteLength, outcome}.
class Transcript {
 public:
  struct Entry {
    std::int64_t round;
    std::string direction;  // "receiver->sender", "sender->receiver", "receiver->oracle", "oracle->receiver", "public"
    std::string messageType;
    std::size_t byteLength;
    std::string outcome;
  };

  void record(std::int64_t round, std::string direction, std::string messageType, std::size_t bytes,
              std::string outcome = "ok");
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t count(std::string_view direction) const;
  void writeJsonl(std::ostream& os) const;

 private:
  std::vector<Entry> entries_;
};

struct ChainReceiverState {
  cotp::OtpReceiverState current;  // round-i tokens and ciphertext
  PkBundle nextPk;                 // round i+1, classical only
  std::uint64_t round = 0;
  ChainParams params;
  std::uint16_t innerInputBits = 0;
  bool dead = false;

  std::size_t liveTokenCount() const;
};

// Sender side of the one-shot setup. After reply() it can be dropped.
class RoSender {
 public:
  RoSender(const Program& p, RamImage ram0, const Key32& mpk, const ChainParams& params, Csprng& rng);

  // Published before the receiver speaks.
  const PkBundle& pk0() const { return pk0_; }
  const PkBundle& pk1() const { return pk1_; }
  crypt::SealedPayload reply(const cotp::ReceiverMessage& tags0, Csprng& rng) const;

 private:
  RecursiveWrapper wrapper0_;
  cotp::OtpSecretKey sk0_;
  PkBundle pk0_, pk1_;
};

ChainReceiverState roSend(const Program& p, const RamImage& ram0, const GlobalSetup& g, QuantumHardware& hw,
                          Csprng& rng, const ChainParams& params = {}, Transcript* log = nullptr);

// One round. nullopt means ⊥ and the chain is dead for good.
std::optional<BitString> roEval(ChainReceiverState& state, const BitString& x, const GlobalSetup& g,
                                QuantumHardware& hw, Csprng& rng, Transcript* log = nullptr);

// Union bound on chain failure within ell rounds at per-round failure p.
double chainFailureBound(std::uint64_t ell, double p);

}  // namespace sqcrypt::ramobf
