#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "sqcrypt/crypt.hpp"
#include "sqcrypt/ftlift.hpp"

// One-time programs behind a stateless, classically accessible oracle.
namespace sqcrypt::cotp {

using crypt::SealedPayload;
using ftlift::FTEvalKey;
using ftlift::FTPublicKey;
using ftlift::FTSecretKey;
using ftlift::FTSignature;
using ftlift::FTTag;
using ftlift::FTToken;
using qhw::QuantumHardware;

inline constexpr std::uint8_t kWireVersion = 1;

// One FT token key per input bit.
struct OtpSecretKey {
  std::vector<FTSecretKey> bits;

  static OtpSecretKey generate(Csprng& rng, std::size_t n, std::size_t w, std::size_t lambda);
  // Deterministic expansion of a 32-byte seed.
  static OtpSecretKey expand(const Key32& seed, std::size_t n, std::size_t w, std::size_t lambda);
};

struct PkBundle {
  std::vector<FTPublicKey> pks;
  std::size_t size() const { return pks.size(); }
  Bytes encode() const;
  static PkBundle decode(ByteView b);  // MalformedPk
  friend bool operator==(const PkBundle&, const PkBundle&) = default;
};

struct EkBundle {
  std::vector<FTEvalKey> eks;
  Bytes encode() const;
  static EkBundle decode(ByteView b);  // MalformedMessage
  friend bool operator==(const EkBundle&, const EkBundle&) = default;
};

// The receiver's single message: one FT tag per input bit.
struct ReceiverMessage {
  std::vector<FTTag> tags;
  std::size_t size() const { return tags.size(); }
  Bytes encode() const;
  static ReceiverMessage decode(ByteView b);  // TagDecodeFailure
  friend bool operator==(const ReceiverMessage&, const ReceiverMessage&) = default;
};

struct OracleQuery {
  BitString x;
  SealedPayload ct;
  std::vector<FTSignature> sigs;
  Bytes aux;  // next-round tags for chain wrappers, empty otherwise

  // version ∥ u16 n ∥ packed x ∥ prefixed ct ∥ n prefixed signatures ∥ prefixed aux
  Bytes encode() const;
  static OracleQuery decode(ByteView b);  // MalformedMessage
};

struct ChainAdvance {
  SealedPayload ctNext;
  PkBundle pkAfterNext;
  friend bool operator==(const ChainAdvance&, const ChainAdvance&) = default;
};

struct OracleAnswer {
  BitString y;
  std::optional<ChainAdvance> next;

  Bytes encode() const;
  static OracleAnswer decode(ByteView b);  // MalformedMessage
  friend bool operator==(const OracleAnswer&, const OracleAnswer&) = default;
};

// Response frame: u8 status (0 = ⊥) then the encoded answer.
Bytes encodeResponse(const std::optional<OracleAnswer>& a);
std::optional<OracleAnswer> decodeResponse(ByteView b);

// Holds msk. Stateless: identical queries give identical answers, and every
// failure collapses to the same ⊥.
class Oracle {
 public:
  explicit Oracle(crypt::MasterKeypair kp);

  const Key32& mpk() const { return kp_.mpk; }
  std::optional<OracleAnswer> query(const OracleQuery& q) const noexcept;
  Bytes queryWire(ByteView request) const noexcept;

 private:
  OracleAnswer answer(const OracleQuery& q) const;

  crypt::MasterKeypair kp_;
  Key32 nonceKey_{};
};

class OracleChannel {
 public:
  virtual ~OracleChannel() = default;
  virtual std::optional<OracleAnswer> query(const OracleQuery& q) = 0;
};

class InProcessChannel final : public OracleChannel {
 public:
  explicit InProcessChannel(std::shared_ptr<const Oracle> oracle) : oracle_(std::move(oracle)) {}
  std::optional<OracleAnswer> query(const OracleQuery& q) override { return oracle_->query(q); }

 private:
  std::shared_ptr<const Oracle> oracle_;
};

struct GlobalSetup {
  std::shared_ptr<const Oracle> oracle;  // server side; absent for remote clients
  std::shared_ptr<OracleChannel> channel;
  Key32 mpk{};

  std::optional<OracleAnswer> query(const OracleQuery& q) const { return channel->query(q); }
  // Public part: version ∥ mpk.
  Bytes encodeAux() const;
  static Key32 decodeAux(ByteView b);
};

GlobalSetup globalSetup(std::uint64_t seed);
GlobalSetup globalSetupFromKeypair(const crypt::MasterKeypair& kp);
// Same oracle, reached through another channel.
GlobalSetup withChannel(const GlobalSetup& g, std::shared_ptr<OracleChannel> channel);

PkBundle otpSetup(const OtpSecretKey& sk);

struct OtpReceiverState {
  PkBundle pk;
  std::vector<FTToken> tokens;
  ReceiverMessage tags;
  std::optional<SealedPayload> ct;
  bool evaluated = false;
};

std::pair<OtpReceiverState, ReceiverMessage> otpGenReceiverMsg(const PkBundle& pk, QuantumHardware& hw, Csprng& rng);
// Sender reply: tokSen per bit, then seals [P, pk, ek] under mpk.
SealedPayload otpGenSenderReply(const Program& p, const OtpSecretKey& sk, const ReceiverMessage& z,
                                const Key32& mpk, Csprng& rng);
// Seals an already computed ek bundle; used by chain wrappers.
EkBundle otpEvalKeys(const OtpSecretKey& sk, const PkBundle& pk, const ReceiverMessage& z);

// Signs x bit by bit and asks the oracle. All tokens are consumed whatever
// the outcome; a second call raises AlreadyEvaluated.
std::optional<BitString> otpEval(OtpReceiverState& state, const BitString& x, const GlobalSetup& g,
                                 QuantumHardware& hw, Csprng& rng);
std::optional<OracleAnswer> otpEvalWithAux(OtpReceiverState& state, const BitString& x, ByteView aux,
                                           const GlobalSetup& g, QuantumHardware& hw, Csprng& rng);

// Signs x with the given tokens; nullopt if any token was already spent.
std::optional<std::vector<FTSignature>> signInput(const PkBundle& pk, const std::vector<FTToken>& tokens,
                                                  const BitString& x, QuantumHardware& hw, Csprng& rng);

}  // namespace sqcrypt::cotp
