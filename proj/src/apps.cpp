#include "sqcrypt/apps.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sqcrypt::apps {

using progvm::Assembler;
using progvm::Op;

ChainReceiverState otmPrepState(ByteView s0, ByteView s1, const GlobalSetup& g, QuantumHardware& hw, Csprng& rng,
                                const ChainParams& params, ramobf::Transcript* log) {
  require(s0.size() == s1.size(), Errc::PreconditionViolated, "OTM secrets must have equal length");
  require(!s0.empty(), Errc::PreconditionViolated, "OTM secrets must be non-empty");
  return ramobf::roSend(progvm::otmProgram(s0, s1), progvm::RamImage{progvm::kOtmUnread}, g, hw, rng, params, log);
}

std::optional<Bytes> otmReadState(ChainReceiverState& state, std::optional<bool> alpha, const GlobalSetup& g,
                                  QuantumHardware& hw, Csprng& rng, ramobf::Transcript* log) {
  BitString in(2);
  if (alpha) {
    in.set(0, true);
    in.set(1, *alpha);
  }
  const auto out = ramobf::roEval(state, in, g, hw, rng, log);
  if (!out || !(*out)[0]) return std::nullopt;
  return out->slice(1, out->size() - 1).toBytes();
}

CpProtected cpProtectWithKey(const Program& c, const Key32& k, const GlobalSetup& g, QuantumHardware& hw,
                             Csprng& rng, const CpConfig& cfg) {
  CpProtected out;
  out.state = ramobf::roSend(progvm::copyProtProgram(c, k, cfg.tokenBits), progvm::copyProtRam(0), g, hw, rng,
                             cfg.chain);
  out.t0 = progvm::copyProtToken(k, 0, cfg.tokenBits);
  out.circuitOutputBits = c.mOutputBits;
  out.tokenBits = cfg.tokenBits;
  return out;
}

CpProtected cpProtect(const Program& c, const GlobalSetup& g, QuantumHardware& hw, Csprng& rng,
                      const CpConfig& cfg) {
  const Key32 k = rng.key32();
  return cpProtectWithKey(c, k, g, hw, rng, cfg);
}

std::optional<CpOutput> cpEval(CpProtected& prog, const BitString& x, const BitString& t, const GlobalSetup& g,
                               QuantumHardware& hw, Csprng& rng) {
  require(t.size() == prog.tokenBits, Errc::PreconditionViolated, "token width");
  BitString in = x;
  in.append(t);
  const auto out = ramobf::roEval(prog.state, in, g, hw, rng);
  if (!out || !(*out)[0]) return std::nullopt;
  return CpOutput{out->slice(1, prog.circuitOutputBits), out->slice(1 + prog.circuitOutputBits, prog.tokenBits)};
}

// ---- pirate game ----

void PirateGameSpec::validate() const {
  require(!circuits.empty(), Errc::PreconditionViolated, "empty circuit distribution");
  const std::uint16_t n = circuits.front().circuit.nInputBits, m = circuits.front().circuit.mOutputBits;
  require(n <= 64 && m >= 1 && m <= 16, Errc::PreconditionViolated, "circuit widths out of range");
  double total = 0;
  for (const auto& c : circuits) {
    require(c.circuit.nInputBits == n && c.circuit.mOutputBits == m, Errc::PreconditionViolated,
            "circuits must share widths");
    require(c.circuit.ramSchema == 0, Errc::PreconditionViolated, "game circuits are stateless");
    require(c.weight >= 0 && !c.pairs.empty(), Errc::PreconditionViolated, "bad circuit entry");
    double pw = 0;
    for (const auto& p : c.pairs) {
      require(p.weight >= 0, Errc::PreconditionViolated, "negative pair weight");
      require(n == 64 || ((p.x1 >> n) == 0 && (p.x2 >> n) == 0), Errc::PreconditionViolated, "challenge too wide");
      pw += p.weight;
    }
    require(std::abs(pw - 1.0) < 1e-9, Errc::PreconditionViolated, "pair weights must sum to 1");
    total += c.weight;
  }
  require(std::abs(total - 1.0) < 1e-9, Errc::PreconditionViolated, "circuit weights must sum to 1");
}

namespace {

BitString answerOf(const Program& c, std::uint64_t x) {
  return progvm::evalProgram(c, {}, BitString::fromUint(x, c.nInputBits)).output;
}

// Marginal answer masses for freeloader 1 and 2, keyed by answer value.
std::array<std::map<std::uint64_t, double>, 2> marginals(const PirateGameSpec& spec) {
  spec.validate();
  std::array<std::map<std::uint64_t, double>, 2> mass;
  for (const auto& c : spec.circuits)
    for (const auto& p : c.pairs) {
      mass[0][answerOf(c.circuit, p.x1).toUint()] += c.weight * p.weight;
      mass[1][answerOf(c.circuit, p.x2).toUint()] += c.weight * p.weight;
    }
  return mass;
}

}  // namespace

TrivialWin trivialWinAnalysis(const PirateGameSpec& spec) {
  const auto mass = marginals(spec);
  const std::uint16_t m = spec.circuits.front().circuit.mOutputBits;
  TrivialWin best;
  best.probability = -1;
  for (int i = 0; i < 2; ++i)
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << m); ++b) {
      auto it = mass[i].find(b);
      const double p = it == mass[i].end() ? 0.0 : it->second;
      if (p > best.probability) best = TrivialWin{p, i + 1, BitString::fromUint(b, m)};
    }
  return best;
}

double trivialWinProbability(const PirateGameSpec& spec) { return trivialWinAnalysis(spec).probability; }

BitString bestGuess(const PirateGameSpec& spec, int freeloader) {
  require(freeloader == 1 || freeloader == 2, Errc::PreconditionViolated, "freeloader index");
  const auto mass = marginals(spec);
  const std::uint16_t m = spec.circuits.front().circuit.mOutputBits;
  std::uint64_t arg = 0;
  double best = -1;
  for (const auto& [b, p] : mass[freeloader - 1])
    if (p > best) best = p, arg = b;
  return BitString::fromUint(arg, m);
}

PirateGameSpec defaultGameSpec() {
  PirateGameSpec spec;
  for (std::uint8_t p : {0x17, 0x5A, 0xA5, 0xE8}) {
    const std::uint64_t q = p ^ 0x01u, q2 = p ^ 0x02u;
    spec.circuits.push_back(
        {"point-" + toHex(Bytes{p}), progvm::pointFunction(p), 0.25, {{p, p, 0.25}, {p, q, 0.25}, {q, p, 0.25}, {q, q2, 0.25}}});
  }
  return spec;
}

PirateGameSpec skewedGameSpec() {
  PirateGameSpec spec;
  Assembler a1;
  a1.loadInputInt(0, 8).push(0x5A).op(Op::CmpEq).emit(0).loadInputInt(0, 8).push(0xA5).op(Op::CmpEq).emit(1);
  Assembler a2;
  a2.loadInputInt(0, 8).push(0x0F).op(Op::CmpEq).emit(0).push(0).emit(1);
  Assembler a3;
  a3.loadIn(6).emit(0).loadIn(7).emit(1);
  spec.circuits.push_back({"eq-5a-a5", a1.build(8, 2, 0), 0.5, {{0x5A, 0xA5, 0.4}, {0xA5, 0x00, 0.3}, {0x00, 0x00, 0.3}}});
  spec.circuits.push_back({"eq-0f", a2.build(8, 2, 0), 0.3, {{0x0F, 0x0F, 0.5}, {0x0F, 0x10, 0.25}, {0x11, 0x0F, 0.25}}});
  spec.circuits.push_back({"low-bits", a3.build(8, 2, 0), 0.2, {{0x01, 0x02, 0.5}, {0x03, 0x03, 0.5}}});
  return spec;
}

// ---- strategies ----

GuessTable GuessTable::of(const PirateGameSpec& spec) {
  return GuessTable{bestGuess(spec, 1), bestGuess(spec, 2), trivialWinAnalysis(spec).freeloader};
}

FreeloaderAnswer EvalOrGuessFreeloader::answer(FreeloaderKit kit, const BitString& x, int index, GameContext& ctx,
                                               Csprng& rng) {
  if (kit.program) {
    if (auto out = cpEval(*kit.program, x, kit.token, ctx.g, ctx.hw, rng)) return {std::move(out->y), true};
  }
  return {ctx.guesses.forIndex(index), false};
}

Split ForwardPirate::split(CpProtected prog, GameContext& ctx, Csprng&) {
  Split s;
  FreeloaderKit full{std::nullopt, prog.t0};
  full.program = std::move(prog);
  // The partner left guessing should be the one with the better marginal.
  if (ctx.guesses.bestGuesser == 1)
    s.f2 = std::move(full);
  else
    s.f1 = std::move(full);
  return s;
}

Split SplitPirate::split(CpProtected prog, GameContext& ctx, Csprng& rng) {
  CpProtected stale = prog;
  const std::uint16_t n = ctx.spec.circuits.front().circuit.nInputBits;
  const BitString t0 = prog.t0;
  auto out = cpEval(prog, BitString(n), t0, ctx.g, ctx.hw, rng);
  Split s;
  s.f1 = FreeloaderKit{std::move(stale), t0};
  if (out) s.f2 = FreeloaderKit{std::move(prog), std::move(out->tNext)};
  return s;
}

Split ReplayPirate::split(CpProtected prog, GameContext&, Csprng&) {
  Split s;
  s.f1 = FreeloaderKit{prog, prog.t0};
  const BitString t0 = prog.t0;
  s.f2 = FreeloaderKit{std::move(prog), t0};
  return s;
}

Split GuessPirate::split(CpProtected, GameContext&, Csprng&) { return {}; }

std::unique_ptr<PirateStrategy> makePirate(std::string_view name) {
  if (name == "forward") return std::make_unique<ForwardPirate>();
  if (name == "split") return std::make_unique<SplitPirate>();
  if (name == "replay") return std::make_unique<ReplayPirate>();
  if (name == "guess") return std::make_unique<GuessPirate>();
  throw Error(Errc::ConfigError, "unknown pirate strategy: " + std::string(name));
}

std::vector<std::string> pirateNames() { return {"forward", "split", "replay", "guess"}; }

namespace {

template <class T>
const T& pickWeighted(const std::vector<T>& items, Csprng& rng) {
  double u = rng.uniform01();
  for (const auto& it : items) {
    if (u < it.weight) return it;
    u -= it.weight;
  }
  return items.back();
}

}  // namespace

GameStats runPirateGame(const PirateGameSpec& spec, PirateStrategy& pirate, FreeloaderStrategy& f1,
                        FreeloaderStrategy& f2, std::uint64_t trials, const GlobalSetup& g, const GameConfig& cfg,
                        std::ostream* csv) {
  const GuessTable guesses = GuessTable::of(spec);
  GameStats stats;
  if (csv) *csv << "trial,circuitId,x1,x2,b1,b2,win\n";
  for (std::uint64_t t = 0; t < trials; ++t) {
    Csprng rng(cfg.seed, t);
    QuantumHardware hw(cfg.pFail);
    GameContext ctx{spec, guesses, g, hw};

    // 1. challenger protects C and hands it to the pirate.
    Csprng challenger = rng.fork("challenger");
    const std::size_t ci = static_cast<std::size_t>(&pickWeighted(spec.circuits, challenger) - spec.circuits.data());
    const GameCircuit& c = spec.circuits[ci];
    std::optional<CpProtected> protectedC;
    while (!protectedC) {
      try {
        protectedC = cpProtect(c.circuit, g, hw, challenger, cfg.cp);
      } catch (const Error& e) {
        if (e.code() != Errc::XInSubspaceAbort) throw;  // regenerate
      }
    }
    CpProtected prog = std::move(*protectedC);

    // 2. pirate splits; freeloader sessions exist before challenges arrive.
    Csprng pirateRng = rng.fork("pirate");
    Split split = pirate.split(std::move(prog), ctx, pirateRng);
    Csprng rng1 = rng.fork("freeloader-1");
    Csprng rng2 = rng.fork("freeloader-2");

    // 3. challenges; the two sessions run in a random order.
    const ChallengePair& pair = pickWeighted(c.pairs, challenger);
    const BitString x1 = BitString::fromUint(pair.x1, c.circuit.nInputBits);
    const BitString x2 = BitString::fromUint(pair.x2, c.circuit.nInputBits);
    FreeloaderAnswer a1, a2;
    if (challenger.coin()) {
      a1 = f1.answer(std::move(split.f1), x1, 1, ctx, rng1);
      a2 = f2.answer(std::move(split.f2), x2, 2, ctx, rng2);
    } else {
      a2 = f2.answer(std::move(split.f2), x2, 2, ctx, rng2);
      a1 = f1.answer(std::move(split.f1), x1, 1, ctx, rng1);
    }

    // 4. judge.
    const bool win = a1.b == answerOf(c.circuit, pair.x1) && a2.b == answerOf(c.circuit, pair.x2);
    ++stats.trials;
    stats.wins += win;
    stats.bothFromOracle += a1.fromOracle && a2.fromOracle;
    if (csv)
      *csv << t << ',' << c.name << ',' << pair.x1 << ',' << pair.x2 << ',' << a1.b.toString() << ','
           << a2.b.toString() << ',' << (win ? 1 : 0) << '\n';
  }
  return stats;
}

}  // namespace sqcrypt::apps
