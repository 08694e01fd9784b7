#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "sqcrypt/ftlift.hpp"

using namespace sqcrypt;
using namespace sqcrypt::cqtok;
using ftlift::FTParams;

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

// All 2^dim elements of a small space.
std::vector<Gf2Vec> elements(const RowSpace& s) {
  std::vector<Gf2Vec> out;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << s.dim()); ++c) {
    Gf2Vec coeffs(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) coeffs.set(i, (c >> i) & 1U);
    out.push_back(s.combine(coeffs));
  }
  return out;
}

struct Honest {
  TokenSecretKey sk;
  TokenPublicKey pk;
  TokenHandle h;
  EvalKey ek;
};

Honest honestToken(Csprng& rng, QuantumHardware& hw, std::size_t lambda) {
  for (;;) {
    Honest t;
    t.sk = TokenSecretKey::generate(rng, lambda);
    t.pk = tokSetup(t.sk);
    auto [h, tag] = tokRec(t.pk, rng, hw);
    try {
      t.ek = tokSen(t.sk, t.pk, tag);
      t.h = h;
      return t;
    } catch (const Error& e) {
      if (e.code() != Errc::XInSubspaceAbort) throw;
    }
  }
}

}  // namespace

// ---- hardware ----

TEST(Hardware, MeasurementsLandInTheirCosets) {
  Csprng rng(1);
  QuantumHardware hw(0.0);
  for (int i = 0; i < 200; ++i) {
    const auto s = qhw::sampleSubspace(rng, 32);
    const auto x = Gf2Vec::random(32, rng), z = Gf2Vec::random(32, rng);
    const auto h0 = hw.prepare(s, x, z), h1 = hw.prepare(s, x, z);
    EXPECT_TRUE(s.contains(hw.measureComputational(h0, rng) ^ x));
    EXPECT_TRUE(qhw::perp(s).contains(hw.measureHadamard(h1, rng) ^ z));
  }
  EXPECT_EQ(hw.liveCount(), 0U);
  EXPECT_EQ(hw.measuredCount(), 400U);
}

TEST(Hardware, SecondMeasurementFails) {
  Csprng rng(2);
  QuantumHardware hw;
  const auto s = qhw::sampleSubspace(rng, 8);
  const auto h = hw.prepare(s, Gf2Vec(8), Gf2Vec(8));
  hw.measureComputational(h, rng);
  EXPECT_FALSE(hw.isLive(h));
  EXPECT_EQ(errorOf([&] { hw.measureHadamard(h, rng); }), Errc::AlreadyConsumed);
  EXPECT_FALSE(hw.tryMeasure(h, false, rng).has_value());
  EXPECT_EQ(errorOf([&] { hw.measureComputational(TokenHandle{999}, rng); }), Errc::UnknownHandle);
}

TEST(Hardware, RacingMeasurementsOneWinner) {
  Csprng seed(3);
  QuantumHardware hw;
  const auto s = qhw::sampleSubspace(seed, 16);
  for (int round = 0; round < 50; ++round) {
    const auto h = hw.prepare(s, Gf2Vec(16), Gf2Vec(16));
    std::atomic<int> wins{0};
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t)
      ts.emplace_back([&, t] {
        Csprng rng(100 + round, t);
        if (hw.tryMeasure(h, t % 2 == 1, rng)) ++wins;
      });
    for (auto& th : ts) th.join();
    EXPECT_EQ(wins.load(), 1);
  }
}

TEST(Hardware, NoiseRateMatchesPFail) {
  Csprng rng(4);
  QuantumHardware hw(0.4);
  int off = 0;
  constexpr int kTrials = 4000;
  for (int i = 0; i < kTrials; ++i) {
    const auto s = qhw::sampleSubspace(rng, 32);
    const auto x = Gf2Vec::random(32, rng);
    off += !s.contains(hw.measureComputational(hw.prepare(s, x, Gf2Vec(32)), rng) ^ x);
  }
  // sd = sqrt(0.24 / 4000) ≈ 0.0077
  EXPECT_NEAR(off / static_cast<double>(kTrials), 0.4, 0.035);
}

TEST(Hardware, PadAndOffsetsRoundTrip) {
  Csprng rng(5);
  const Key32 pad = rng.key32();
  const auto s = qhw::sampleSubspace(rng, 16);
  EXPECT_EQ(qhw::openPad(qhw::sealPad(pad)), pad);
  EXPECT_EQ(qhw::unpadSubspace(qhw::padSubspace(s, pad), 16, pad), s);
  const auto x = Gf2Vec::random(16, rng), z = Gf2Vec::random(16, rng);
  Bytes tag = qhw::sealOffsets(pad, 16, x, z, rng);
  EXPECT_EQ(qhw::openOffsets(pad, 16, tag), std::make_pair(x, z));
  tag.back() ^= 1;
  EXPECT_EQ(errorOf([&] { qhw::openOffsets(pad, 16, tag); }), Errc::TagDecodeFailure);
}

// ---- single tokens ----

TEST(Token, SetupIsDeterministic) {
  Csprng rng(10);
  const auto sk = TokenSecretKey::generate(rng, 32);
  EXPECT_EQ(tokSetup(sk), tokSetup(sk));
  EXPECT_EQ(TokenPublicKey::decode(tokSetup(sk).encode()), tokSetup(sk));
}

TEST(Token, IndependentKeysGiveDistinctPks) {
  Csprng rng(11);
  std::set<Bytes> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(tokSetup(TokenSecretKey::generate(rng, 32)).encode());
  EXPECT_EQ(seen.size(), 1000U);
}

TEST(Token, RecDrawsFreshOffsets) {
  Csprng rng(12);
  QuantumHardware hw;
  const auto sk = TokenSecretKey::generate(rng, 32);
  const auto pk = tokSetup(sk);
  auto [h1, t1] = tokRec(pk, rng, hw);
  auto [h2, t2] = tokRec(pk, rng, hw);
  EXPECT_NE(h1, h2);
  EXPECT_NE(openTag(sk, t1), openTag(sk, t2));
  EXPECT_EQ(hw.liveCount(), 2U);
}

TEST(Token, CheckersCoverTheWholeCosetAtEight) {
  Csprng rng(13);
  QuantumHardware hw;
  for (int trial = 0; trial < 20; ++trial) {
    auto t = honestToken(rng, hw, 8);
    const auto state = hw.inspect(t.h);
    ASSERT_TRUE(state);
    const auto elems = elements(t.sk.mS);
    ASSERT_EQ(elems.size(), 16U);
    for (const auto& s : elems) {
      const Gf2Vec v = s ^ state->x;
      EXPECT_TRUE(t.ek.checkerA(v) || t.ek.checkerB(v));
      EXPECT_TRUE(tokCV(t.pk, t.ek, v, false));
    }
    // Hadamard side: every element of S⊥ + z verifies for bit 1.
    for (const auto& u : elements(qhw::perp(t.sk.mS))) EXPECT_TRUE(tokCV(t.pk, t.ek, u ^ state->z, true));
  }
}

TEST(Token, ForgedTagIsRejected) {
  Csprng rng(14);
  QuantumHardware hw;
  const auto sk = TokenSecretKey::generate(rng, 32);
  const auto pk = tokSetup(sk);
  auto [h, tag] = tokRec(pk, rng, hw);
  tag.encOffsets[tag.encOffsets.size() / 2] ^= 0x10;
  EXPECT_EQ(errorOf([&] { tokSen(sk, pk, tag); }), Errc::TagDecodeFailure);
}

TEST(Token, OffsetInsideSubspaceAborts) {
  Csprng rng(15);
  const auto sk = TokenSecretKey::generate(rng, 32);
  const auto pk = tokSetup(sk);
  const auto x = sk.mS.randomElement(rng);
  const auto tag = sealTag(sk, x, Gf2Vec::random(32, rng), rng);
  EXPECT_EQ(errorOf([&] { tokSen(sk, pk, tag); }), Errc::XInSubspaceAbort);
}

TEST(Token, NoiselessSignaturesAlwaysVerify) {
  Csprng rng(16);
  QuantumHardware hw(0.0);
  for (int i = 0; i < 1000; ++i) {
    auto t = honestToken(rng, hw, 32);
    const bool b = i % 2 == 1;
    const auto sig = tokSign(t.pk, t.ek, t.h, b, hw, rng);
    EXPECT_TRUE(tokCV(t.pk, t.ek, sig, b));
    EXPECT_EQ(decodeSignature(encodeSignature(sig)), sig);
  }
}

TEST(Token, SignTwiceIsRefused) {
  Csprng rng(17);
  QuantumHardware hw;
  auto t = honestToken(rng, hw, 32);
  tokSign(t.pk, t.ek, t.h, false, hw, rng);
  EXPECT_EQ(errorOf([&] { tokSign(t.pk, t.ek, t.h, true, hw, rng); }), Errc::AlreadyConsumed);
}

TEST(Token, RandomVectorsAlmostNeverVerify) {
  Csprng rng(18);
  QuantumHardware hw;
  auto t = honestToken(rng, hw, 32);
  int accepted = 0;
  for (int i = 0; i < 10'000; ++i) accepted += tokCV(t.pk, t.ek, Gf2Vec::random(32, rng), false);
  EXPECT_EQ(accepted, 0);
}

TEST(Token, HadamardOutcomesRejectedForBitZeroUnlessCosetsMeet) {
  Csprng rng(19);
  QuantumHardware hw;
  int disjoint = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto t = honestToken(rng, hw, 8);
    const auto state = *hw.inspect(t.h);
    bool meet = false;
    for (const auto& u : elements(qhw::perp(t.sk.mS))) {
      const Gf2Vec sigma = u ^ state.z;
      const bool inCoset = t.sk.mS.contains(sigma ^ state.x);
      meet |= inCoset;
      EXPECT_EQ(tokCV(t.pk, t.ek, sigma, false), inCoset);
    }
    disjoint += !meet;
  }
  EXPECT_GT(disjoint, 0);
}

TEST(Token, WrongWidthSignatureRejected) {
  Csprng rng(20);
  QuantumHardware hw;
  auto t = honestToken(rng, hw, 32);
  EXPECT_FALSE(tokCV(t.pk, t.ek, Gf2Vec(16), false));
}

// ---- fault-tolerant lifting ----

// Values from an exact rational binomial evaluation.
TEST(FtParams, FrozenOracleValues) {
  EXPECT_EQ(ftlift::ftParams(0.5, 1e-9).w, 1U);
  const auto p = ftlift::ftParams(0.1, 1e-3);
  EXPECT_EQ(p.w, 235U);
  EXPECT_NEAR(p.tail, 9.656710e-04, 1e-9);
  EXPECT_NEAR(ftlift::majorityFailure(233, 0.1), 1.009585e-03, 1e-9);
  const auto q = ftlift::ftParams(0.25, 0.05);
  EXPECT_EQ(q.w, 9U);
  EXPECT_NEAR(q.tail, 4.892731e-02, 1e-8);
  EXPECT_NEAR(ftlift::majorityFailure(7, 0.25), 7.055664e-02, 1e-8);
  EXPECT_EQ(ftlift::ftParams(0.3, 0.01).w, 13U);
  EXPECT_EQ(ftlift::ftParams(0.1, 1.25e-4).w, 329U);
}

TEST(FtParams, FrozenGrid) {
  const double deltas[] = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
  const std::uint32_t expected[10][6] = {
      {163, 539, 951, 1377, 1811, 2249}, {41, 133, 235, 339, 447, 553}, {17, 57, 101, 147, 193, 241},
      {9, 31, 55, 79, 105, 131},         {7, 19, 33, 49, 63, 79},       {5, 13, 21, 31, 41, 51},
      {3, 9, 15, 21, 27, 35},            {1, 5, 9, 13, 19, 23},         {1, 3, 7, 9, 11, 15},
      {1, 1, 1, 1, 1, 1},
  };
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 6; ++j) {
      const double eps = std::pow(10.0, -(j + 1));
      const auto p = ftlift::ftParams(deltas[i], eps);
      EXPECT_EQ(p.w, expected[i][j]) << "delta " << deltas[i] << " eps " << eps;
      EXPECT_LE(p.w, ftlift::hoeffdingW(deltas[i], eps));
    }
}

TEST(FtParams, RejectsBadArguments) {
  EXPECT_THROW(ftlift::ftParams(0.0, 0.1), Error);
  EXPECT_THROW(ftlift::ftParams(0.1, 0.0), Error);
  EXPECT_THROW(ftlift::ftParams(0.6, 0.1), Error);
}

TEST(FtMajority, Verdicts) {
  EXPECT_TRUE(ftlift::majority({true, true, false}));
  EXPECT_FALSE(ftlift::majority({false, false, true}));
  EXPECT_TRUE(ftlift::majority({true, true, true, false, false}));
  EXPECT_FALSE(ftlift::majority({true, true, false, false}));
}

TEST(FtToken, NoiselessAllCopiesVerify) {
  Csprng rng(30);
  QuantumHardware hw(0.0);
  const auto params = ftlift::ftParamsForW(3);
  const auto sk = ftlift::FTSecretKey::generate(rng, 3, 32);
  const auto pk = ftlift::ftSetup(sk);
  auto [tok, tag] = ftlift::ftRec(pk, rng, hw);
  EXPECT_EQ(ftlift::FTTag::decode(tag.encode()), tag);
  ftlift::FTEvalKey ek;
  try {
    ek = ftlift::ftSen(sk, pk, tag);
  } catch (const Error& e) {
    GTEST_SKIP() << e.what();  // x in S, probability 3 * 2^-16
  }
  EXPECT_EQ(ftlift::FTEvalKey::decode(ek.encode()), ek);
  const auto sig = ftlift::ftSign(params, ek, tok, true, hw, rng);
  ASSERT_EQ(sig.parts.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(tokCV(pk.parts[i], ek.parts[i], sig.parts[i], true));
  EXPECT_TRUE(ftlift::ftCV(params, pk, ek, sig, true));
  EXPECT_FALSE(ftlift::ftCV(params, pk, ek, sig, false));
  EXPECT_EQ(ftlift::FTSignature::decode(sig.encode()), sig);
  EXPECT_EQ(errorOf([&] { ftlift::ftSign(params, ek, tok, false, hw, rng); }), Errc::AlreadyConsumed);
}

TEST(FtToken, MajorityToleratesMinorityCorruption) {
  Csprng rng(31);
  QuantumHardware hw(0.0);
  const auto params = ftlift::ftParamsForW(5);
  for (;;) {
    const auto sk = ftlift::FTSecretKey::generate(rng, 5, 32);
    const auto pk = ftlift::ftSetup(sk);
    auto [tok, tag] = ftlift::ftRec(pk, rng, hw);
    ftlift::FTEvalKey ek;
    try {
      ek = ftlift::ftSen(sk, pk, tag);
    } catch (const Error&) {
      continue;
    }
    auto sig = ftlift::ftSign(params, ek, tok, false, hw, rng);
    sig.parts[3] = Gf2Vec::random(32, rng);
    sig.parts[4] = Gf2Vec::random(32, rng);
    EXPECT_TRUE(ftlift::ftCV(params, pk, ek, sig, false));
    sig.parts[0] = Gf2Vec::random(32, rng);
    EXPECT_FALSE(ftlift::ftCV(params, pk, ek, sig, false));
    sig.parts.pop_back();
    EXPECT_FALSE(ftlift::ftCV(params, pk, ek, sig, false));
    break;
  }
}
