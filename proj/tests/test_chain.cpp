#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sqcrypt/apps.hpp"

using namespace sqcrypt;
using namespace sqcrypt::ramobf;

namespace {

template <class F>
Errc errorOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::ConfigError;
}

// Wide tokens: the sender's x-in-S abort is negligible at λ = 64.
constexpr ChainParams kParams{64, 1, 16};

const BitString kOne = BitString::fromString("0001");

Bytes str(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST(Chain, SetupIsOneRoundTrip) {
  Csprng rng(1);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(1);
  Transcript log;
  auto st = roSend(progvm::accumulatorProgram(), {0}, g, hw, rng, kParams, &log);
  EXPECT_EQ(st.round, 0U);
  EXPECT_FALSE(st.dead);
  EXPECT_EQ(st.liveTokenCount(), (4U + kParams.bindBits) * kParams.w);
  EXPECT_EQ(log.count("receiver->sender"), 1U);
  EXPECT_EQ(log.count("sender->receiver"), 1U);
  std::ostringstream os;
  log.writeJsonl(os);
  EXPECT_NE(os.str().find("\"direction\":\"receiver->sender\""), std::string::npos);
}

TEST(Chain, AccumulatorCountsAcrossRounds) {
  Csprng rng(2);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(2);
  auto st = roSend(progvm::accumulatorProgram(), {0}, g, hw, rng, kParams);
  for (std::uint64_t k = 1; k <= 3; ++k) {
    const auto y = roEval(st, kOne, g, hw, rng);
    ASSERT_TRUE(y);
    EXPECT_EQ(y->toUint(), k);
    EXPECT_EQ(st.round, k);
    EXPECT_EQ(hw.liveCount(), (4U + kParams.bindBits) * kParams.w);
  }
}

TEST(Chain, RetainedCopyCannotRunARoundTwice) {
  Csprng rng(3);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(3);
  auto st = roSend(progvm::accumulatorProgram(), {0}, g, hw, rng, kParams);
  auto copy = st;
  ASSERT_TRUE(roEval(st, kOne, g, hw, rng));
  EXPECT_FALSE(roEval(copy, BitString::fromString("0010"), g, hw, rng));
  EXPECT_TRUE(copy.dead);
  EXPECT_FALSE(roEval(copy, kOne, g, hw, rng));
  // The live chain is unaffected.
  EXPECT_EQ(roEval(st, kOne, g, hw, rng)->toUint(), 2U);
}

TEST(Chain, HundredNoiselessRounds) {
  Csprng rng(4);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(4);
  const auto p = progvm::maxTrackerProgram();
  progvm::RamImage ram(p.ramSchema, 0);
  auto st = roSend(p, ram, g, hw, rng, {64, 1, 8});
  for (int k = 0; k < 100; ++k) {
    BitString x(p.nInputBits);
    for (std::size_t i = 0; i < x.size(); ++i) x.set(i, rng.coin());
    const auto ref = progvm::evalProgram(p, ram, x);
    ram = ref.ram;
    ASSERT_EQ(roEval(st, x, g, hw, rng), ref.output) << "round " << k;
  }
}

TEST(Chain, FtChainWithNoise) {
  Csprng rng(5);
  QuantumHardware hw(0.05);
  const auto g = cotp::globalSetup(5);
  const ChainParams params{64, 15, 8};
  auto st = roSend(progvm::parityLatchProgram(), progvm::RamImage(progvm::parityLatchProgram().ramSchema, 0), g, hw,
                   rng, params);
  for (int k = 0; k < 5; ++k) ASSERT_TRUE(roEval(st, BitString(progvm::parityLatchProgram().nInputBits), g, hw, rng));
  EXPECT_EQ(hw.liveCount(), (progvm::parityLatchProgram().nInputBits + 8U) * 15U);
}

TEST(Wrapper, EncodeDecode) {
  Csprng rng(6);
  RecursiveWrapper w;
  w.inner = progvm::accumulatorProgram();
  w.chainKey = rng.key32();
  w.round = 7;
  w.ram = {42};
  w.mpk = rng.key32();
  w.params = kParams;
  EXPECT_EQ(RecursiveWrapper::decode(w.encode()), w);
  EXPECT_EQ(RecursiveWrapper::fromProgram(w.toProgram()), w);
  Bytes bad = w.encode();
  bad.resize(bad.size() - 3);
  EXPECT_EQ(errorOf([&] { RecursiveWrapper::decode(bad); }), Errc::MalformedProgram);
}

TEST(Wrapper, OneStepAdvancesRamAndRound) {
  Csprng rng(7);
  QuantumHardware hw;
  const auto kp = crypt::pkGen(rng);
  RecursiveWrapper w;
  w.inner = progvm::accumulatorProgram();
  w.chainKey = rng.key32();
  w.ram = {2};
  w.mpk = kp.mpk;
  w.params = {32, 1, 8};

  const auto pk1 = cotp::otpSetup(roundKey(w.chainKey, 1, w.inputBits(), w.params));
  auto [st1, tags] = cotp::otpGenReceiverMsg(pk1, hw, rng);
  const Bytes tagBytes = tags.encode();
  BitString x = kOne;
  x.append(bindDigest(tagBytes, 8));

  const auto ans = evalWrapper(w, x, tagBytes, rng);
  EXPECT_EQ(ans.y.toUint(), 3U);
  ASSERT_TRUE(ans.next);
  const auto t = crypt::openTriple(kp.msk, ans.next->ctNext);
  const auto next = RecursiveWrapper::fromProgram(t.program);
  EXPECT_EQ(next.ram, progvm::RamImage{3});
  EXPECT_EQ(next.round, 1U);
  EXPECT_EQ(t.pk, pk1.encode());
  EXPECT_EQ(ans.next->pkAfterNext, cotp::otpSetup(roundKey(w.chainKey, 2, w.inputBits(), w.params)));

  // Tags that do not match the signed digest.
  BitString stale = kOne;
  stale.append(bindDigest(Bytes{1}, 8));
  EXPECT_EQ(errorOf([&] { evalWrapper(w, stale, tagBytes, rng); }), Errc::IntegrityFailure);

  // A corrupted tag whose digest was signed honestly.
  auto corrupt = tags;
  corrupt.tags[0].parts[0].encOffsets.back() ^= 1;
  const Bytes corruptBytes = corrupt.encode();
  BitString xc = kOne;
  xc.append(bindDigest(corruptBytes, 8));
  EXPECT_EQ(errorOf([&] { evalWrapper(w, xc, corruptBytes, rng); }), Errc::TagDecodeFailure);
}

TEST(Chain, FailureBound) {
  EXPECT_DOUBLE_EQ(chainFailureBound(10, 0.01), 0.1);
  EXPECT_DOUBLE_EQ(chainFailureBound(200, 0.01), 1.0);
}

// ---- one-time memories ----

TEST(Otm, ReadReturnsChosenSecret) {
  Csprng rng(10);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(10);
  auto st = apps::otmPrepState(str("A"), str("B"), g, hw, rng, kParams);
  EXPECT_EQ(st.round, 0U);
  EXPECT_EQ(apps::otmReadState(st, true, g, hw, rng), str("B"));
}

TEST(Otm, BottomReadPreservesState) {
  Csprng rng(11);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(11);
  auto st = apps::otmPrepState(str("A"), str("B"), g, hw, rng, kParams);
  EXPECT_FALSE(apps::otmReadState(st, std::nullopt, g, hw, rng));
  EXPECT_FALSE(st.dead);
  EXPECT_EQ(apps::otmReadState(st, false, g, hw, rng), str("A"));
}

TEST(Otm, SecondReadIsBottom) {
  Csprng rng(12);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(12);
  auto st = apps::otmPrepState(str("A"), str("B"), g, hw, rng, kParams);
  EXPECT_EQ(apps::otmReadState(st, false, g, hw, rng), str("A"));
  EXPECT_FALSE(apps::otmReadState(st, true, g, hw, rng));
  EXPECT_FALSE(apps::otmReadState(st, false, g, hw, rng));
}

TEST(Otm, IndependentInstances) {
  Csprng rng(13);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(13);
  auto a = apps::otmPrepState(str("A"), str("B"), g, hw, rng, kParams);
  auto b = apps::otmPrepState(str("C"), str("D"), g, hw, rng, kParams);
  EXPECT_EQ(apps::otmReadState(a, false, g, hw, rng), str("A"));
  EXPECT_EQ(apps::otmReadState(b, true, g, hw, rng), str("D"));
}

TEST(Otm, UnequalLengthsRejected) {
  Csprng rng(14);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(14);
  EXPECT_EQ(errorOf([&] { apps::otmPrepState(str("A"), str("BB"), g, hw, rng, kParams); }),
            Errc::PreconditionViolated);
}

// ---- copy protection ----

namespace {

const apps::CpConfig kCp{kParams, 16};

}  // namespace

TEST(CopyProtection, FirstTokenIsPrfOfZero) {
  Csprng rng(20);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(20);
  const Key32 k = rng.key32();
  const auto prog = apps::cpProtectWithKey(progvm::pointFunction(0x33), k, g, hw, rng, kCp);
  EXPECT_EQ(prog.t0, progvm::copyProtToken(k, 0, 16));
  EXPECT_EQ(progvm::copyProtToken(k, 0, 256), BitString::fromBytes(crypt::prf(k, 0)));
  const auto other = apps::cpProtect(progvm::pointFunction(0x33), g, hw, rng, kCp);
  EXPECT_NE(prog.t0, other.t0);
}

TEST(CopyProtection, HonestChainThreadsTokens) {
  Csprng rng(21);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(21);
  const auto c = progvm::pointFunction(0x33);
  auto prog = apps::cpProtect(c, g, hw, rng, kCp);
  BitString t = prog.t0;
  for (int r = 0; r < 10; ++r) {
    const BitString x = BitString::fromUint(r % 2 ? 0x33 : rng.below(256), 8);
    const auto out = apps::cpEval(prog, x, t, g, hw, rng);
    ASSERT_TRUE(out) << "round " << r;
    EXPECT_EQ(out->y, progvm::evalProgram(c, {}, x).output);
    t = out->tNext;
  }
}

TEST(CopyProtection, WrongTokenBricksForGood) {
  Csprng rng(22);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(22);
  const Key32 k = rng.key32();
  auto prog = apps::cpProtectWithKey(progvm::pointFunction(0x01), k, g, hw, rng, kCp);
  const BitString x = BitString::fromUint(1, 8);
  EXPECT_TRUE(apps::cpEval(prog, x, prog.t0, g, hw, rng));
  EXPECT_FALSE(apps::cpEval(prog, x, prog.t0, g, hw, rng));  // stale token at round 1
  for (std::uint64_t r = 2; r < 6; ++r) EXPECT_FALSE(apps::cpEval(prog, x, progvm::copyProtToken(k, r, 16), g, hw, rng));
  EXPECT_FALSE(prog.state.dead);
}

TEST(CopyProtection, TokenWidthChecked) {
  Csprng rng(23);
  QuantumHardware hw;
  const auto g = cotp::globalSetup(23);
  auto prog = apps::cpProtect(progvm::pointFunction(0x01), g, hw, rng, kCp);
  EXPECT_THROW(apps::cpEval(prog, BitString(8), BitString(8), g, hw, rng), Error);
}

// ---- pirate game ----

namespace {

// n = 8, m bits: the circuit outputs the low m input bits; challenges range
// over all 2^m residues so every answer is equally likely.
apps::PirateGameSpec uniformSpec(std::uint16_t m) {
  progvm::Assembler a;
  for (std::uint16_t i = 0; i < m; ++i) a.loadIn(static_cast<std::uint16_t>(8 - m + i)).emit(i);
  apps::GameCircuit c{"low", a.build(8, m, 0), 1.0, {}};
  const std::uint64_t k = std::uint64_t{1} << m;
  for (std::uint64_t v = 0; v < k; ++v) c.pairs.push_back({v, (v + 1) % k, 1.0 / static_cast<double>(k)});
  return {{c}};
}

}  // namespace

TEST(TrivialWin, SkewedSpecFromEnumerator) {
  const auto t = apps::trivialWinAnalysis(apps::skewedGameSpec());
  EXPECT_NEAR(t.probability, 0.425, 1e-12);
  EXPECT_EQ(t.freeloader, 1);
  EXPECT_EQ(t.answer.toString(), "10");
  EXPECT_EQ(apps::bestGuess(apps::skewedGameSpec(), 2).size(), 2U);
}

TEST(TrivialWin, DefaultSpecIsOneHalf) { EXPECT_NEAR(apps::trivialWinProbability(apps::defaultGameSpec()), 0.5, 1e-12); }

TEST(TrivialWin, UniformAnswers) {
  for (std::uint16_t m = 1; m <= 4; ++m)
    EXPECT_NEAR(apps::trivialWinProbability(uniformSpec(m)), std::ldexp(1.0, -m), 1e-12) << "m=" << m;
}

TEST(TrivialWin, SpecValidation) {
  auto s = apps::skewedGameSpec();
  s.circuits[0].weight = 0.6;
  EXPECT_EQ(errorOf([&] { s.validate(); }), Errc::PreconditionViolated);
  auto s2 = apps::skewedGameSpec();
  s2.circuits[1].circuit = progvm::pointFunction(0x0F);  // m = 1
  EXPECT_EQ(errorOf([&] { s2.validate(); }), Errc::PreconditionViolated);
  auto s3 = apps::skewedGameSpec();
  s3.circuits[2].pairs[0].x1 = 0x100;
  EXPECT_EQ(errorOf([&] { s3.validate(); }), Errc::PreconditionViolated);
}

TEST(PirateGame, StrategyRegistry) {
  for (const auto& n : apps::pirateNames()) EXPECT_EQ(apps::makePirate(n)->name(), n);
  EXPECT_EQ(errorOf([] { apps::makePirate("nope"); }), Errc::ConfigError);
}

TEST(PirateGame, ReplayNeverGetsTwoOracleAnswers) {
  const auto g = cotp::globalSetup(30);
  const auto spec = apps::skewedGameSpec();
  apps::ReplayPirate pirate;
  apps::EvalOrGuessFreeloader f1, f2;
  apps::GameConfig cfg{{{32, 1, 16}, 16}, 0.0, 30};
  std::ostringstream csv;
  const auto stats = apps::runPirateGame(spec, pirate, f1, f2, 150, g, cfg, &csv);
  EXPECT_EQ(stats.trials, 150U);
  EXPECT_EQ(stats.bothFromOracle, 0U);
  const std::string rows = csv.str();
  EXPECT_EQ(rows.substr(0, rows.find('\n')), "trial,circuitId,x1,x2,b1,b2,win");
  EXPECT_EQ(static_cast<std::size_t>(std::count(rows.begin(), rows.end(), '\n')), 151U);
}

TEST(PirateGame, ForwardMatchesTrivialRate) {
  const auto g = cotp::globalSetup(31);
  const auto spec = apps::skewedGameSpec();
  apps::ForwardPirate pirate;
  apps::EvalOrGuessFreeloader f1, f2;
  apps::GameConfig cfg{{{32, 1, 16}, 16}, 0.0, 31};
  const auto stats = apps::runPirateGame(spec, pirate, f1, f2, 400, g, cfg);
  // sd ≈ 0.025 at 400 games
  EXPECT_NEAR(stats.rate(), 0.425, 0.1);
}
