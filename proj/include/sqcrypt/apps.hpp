#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sqcrypt/ramobf.hpp"

namespace sqcrypt::apps {

using ramobf::ChainParams;
using ramobf::ChainReceiverState;
using ramobf::GlobalSetup;
using ramobf::QuantumHardware;

// ---- one-time memories ----

ChainReceiverState otmPrepState(ByteView s0, ByteView s1, const GlobalSetup& g, QuantumHardware& hw, Csprng& rng,
                                const ChainParams& params = {}, ramobf::Transcript* log = nullptr);

// alpha = nullopt is the ⊥ input. Returns s_alpha on the first real read and
// ⊥ otherwise; each call spends one chain round.
std::optional<Bytes> otmReadState(ChainReceiverState& state, std::optional<bool> alpha, const GlobalSetup& g,
                                  QuantumHardware& hw, Csprng& rng, ramobf::Transcript* log = nullptr);

// ---- copy protection ----

struct CpConfig {
  ChainParams chain;
  std::uint16_t tokenBits = 256;
};

struct CpProtected {
  ChainReceiverState state;
  BitString t0;
  std::uint16_t circuitOutputBits = 0;
  std::uint16_t tokenBits = 256;
};

CpProtected cpProtect(const Program& c, const GlobalSetup& g, QuantumHardware& hw, Csprng& rng,
                      const CpConfig& cfg = {});
CpProtected cpProtectWithKey(const Program& c, const Key32& k, const GlobalSetup& g, QuantumHardware& hw,
                             Csprng& rng, const CpConfig& cfg = {});

struct CpOutput {
  BitString y;
  BitString tNext;
};

// ⊥ when the chain is bricked, the token is wrong, or the chain breaks.
// A bricked chain still spends a round.
std::optional<CpOutput> cpEval(CpProtected& prog, const BitString& x, const BitString& t, const GlobalSetup& g,
                               QuantumHardware& hw, Csprng& rng);

// ---- pirate game ----

struct ChallengePair {
  std::uint64_t x1 = 0, x2 = 0;
  double weight = 0.0;
};

struct GameCircuit {
  std::string name;
  Program circuit;
  double weight = 0.0;
  std::vector<ChallengePair> pairs;
};

struct PirateGameSpec {
  std::vector<GameCircuit> circuits;
  void validate() const;  // PreconditionViolated
};

struct TrivialWin {
  double probability = 0.0;
  int freeloader = 1;  // 1 or 2
  BitString answer;
};

// Best freeloader marginal over all answers, by exhaustive enumeration.
TrivialWin trivialWinAnalysis(const PirateGameSpec& spec);
double trivialWinProbability(const PirateGameSpec& spec);
// The answer maximising freeloader i's marginal (i = 1, 2).
BitString bestGuess(const PirateGameSpec& spec, int freeloader);

// Point functions over 8-bit inputs with uniform challenge pairs.
PirateGameSpec defaultGameSpec();
// Three 2-bit-output circuits with skewed weights.
PirateGameSpec skewedGameSpec();

// What a freeloader receives from the pirate. Kits are moved, never shared.
struct FreeloaderKit {
  std::optional<CpProtected> program;
  BitString token;
};

struct Split {
  FreeloaderKit f1, f2;
};

// Best marginal guesses, computed once per spec.
struct GuessTable {
  BitString g1, g2;
  int bestGuesser = 1;  // the freeloader whose guess reaches p^triv
  static GuessTable of(const PirateGameSpec& spec);
  const BitString& forIndex(int i) const { return i == 1 ? g1 : g2; }
};

// Public game context: the spec, the global setup and the hardware. Each
// freeloader gets its own random stream.
struct GameContext {
  const PirateGameSpec& spec;
  const GuessTable& guesses;
  const GlobalSetup& g;
  QuantumHardware& hw;
};

class PirateStrategy {
 public:
  virtual ~PirateStrategy() = default;
  virtual std::string name() const = 0;
  virtual Split split(CpProtected prog, GameContext& ctx, Csprng& rng) = 0;
};

struct FreeloaderAnswer {
  BitString b;
  bool fromOracle = false;  // a non-⊥ evaluation produced b
};

class FreeloaderStrategy {
 public:
  virtual ~FreeloaderStrategy() = default;
  virtual FreeloaderAnswer answer(FreeloaderKit kit, const BitString& x, int index, GameContext& ctx,
                                  Csprng& rng) = 0;
};

// Evaluates with the kit if it has one; falls back to the best marginal guess.
class EvalOrGuessFreeloader final : public FreeloaderStrategy {
 public:
  FreeloaderAnswer answer(FreeloaderKit kit, const BitString& x, int index, GameContext& ctx, Csprng& rng) override;
};

// Hands everything to the freeloader whose partner guesses best.
class ForwardPirate final : public PirateStrategy {
 public:
  std::string name() const override { return "forward"; }
  Split split(CpProtected prog, GameContext& ctx, Csprng& rng) override;
};

// Spends round 0 itself; F1 gets the stale round-0 copy, F2 the live chain.
class SplitPirate final : public PirateStrategy {
 public:
  std::string name() const override { return "split"; }
  Split split(CpProtected prog, GameContext& ctx, Csprng& rng) override;
};

// Gives both freeloaders the same round-0 material and token.
class ReplayPirate final : public PirateStrategy {
 public:
  std::string name() const override { return "replay"; }
  Split split(CpProtected prog, GameContext& ctx, Csprng& rng) override;
};

// Discards the program; both freeloaders guess.
class GuessPirate final : public PirateStrategy {
 public:
  std::string name() const override { return "guess"; }
  Split split(CpProtected prog, GameContext& ctx, Csprng& rng) override;
};

std::unique_ptr<PirateStrategy> makePirate(std::string_view name);  // ConfigError
std::vector<std::string> pirateNames();

struct GameConfig {
  CpConfig cp;
  double pFail = 0.0;
  std::uint64_t seed = 1;
};

struct GameStats {
  std::uint64_t trials = 0;
  std::uint64_t wins = 0;
  std::uint64_t bothFromOracle = 0;  // trials where both answers came from the oracle
  double rate() const { return trials ? static_cast<double>(wins) / static_cast<double>(trials) : 0.0; }
};

// Plays the four-step game `trials` times; CSV rows go to csv when given.
GameStats runPirateGame(const PirateGameSpec& spec, PirateStrategy& pirate, FreeloaderStrategy& f1,
                        FreeloaderStrategy& f2, std::uint64_t trials, const GlobalSetup& g, const GameConfig& cfg,
                        std::ostream* csv = nullptr);

}  // namespace sqcrypt::apps
