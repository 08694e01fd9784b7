#include <gtest/gtest.h>

#include <thread>

#include "sqcrypt/cotp.hpp"
#include "sqcrypt/transport.hpp"

using namespace sqcrypt;
using namespace sqcrypt::cotp;

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

struct Generated {
  OtpSecretKey sk;
  OtpReceiverState st;
};

// Full generation for program p; retries the rare x-in-S abort.
Generated generate(const Program& p, std::size_t w, std::size_t lambda, const GlobalSetup& g, QuantumHardware& hw,
                   Csprng& rng) {
  for (;;) {
    Generated out;
    out.sk = OtpSecretKey::generate(rng, p.nInputBits, w, lambda);
    const auto pk = otpSetup(out.sk);
    auto [st, msg] = otpGenReceiverMsg(pk, hw, rng);
    try {
      st.ct = otpGenSenderReply(p, out.sk, ReceiverMessage::decode(msg.encode()), g.mpk, rng);
      out.st = std::move(st);
      return out;
    } catch (const Error& e) {
      if (e.code() != Errc::XInSubspaceAbort) throw;
      for (const auto& t : st.tokens)
        for (auto h : t.handles) hw.discard(h);
    }
  }
}

OracleQuery honestQuery(Generated& gen, const BitString& x, QuantumHardware& hw, Csprng& rng) {
  auto sigs = signInput(gen.st.pk, gen.st.tokens, x, hw, rng);
  EXPECT_TRUE(sigs.has_value());
  return OracleQuery{x, *gen.st.ct, std::move(*sigs), {}};
}

}  // namespace

TEST(GlobalSetup, IndependentSetupsAndWrongKey) {
  const auto a = globalSetup(1), b = globalSetup(2);
  EXPECT_NE(a.mpk, b.mpk);
  EXPECT_EQ(globalSetup(1).mpk, a.mpk);
  EXPECT_EQ(GlobalSetup::decodeAux(a.encodeAux()), a.mpk);

  Csprng rng(1);
  QuantumHardware hw;
  auto gen = generate(progvm::identityProgram(2), 1, 32, b, hw, rng);
  const auto q = honestQuery(gen, BitString::fromString("10"), hw, rng);
  EXPECT_FALSE(a.query(q).has_value());
  EXPECT_TRUE(b.query(q).has_value());
}

TEST(OtpSetup, BundleShapes) {
  Csprng rng(2);
  const auto pk1 = otpSetup(OtpSecretKey::generate(rng, 1, 1, 32));
  ASSERT_EQ(pk1.size(), 1U);
  EXPECT_EQ(pk1.pks[0].parts.size(), 1U);
  const auto pk4 = otpSetup(OtpSecretKey::generate(rng, 4, 1, 32));
  ASSERT_EQ(pk4.size(), 4U);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) EXPECT_NE(pk4.pks[i], pk4.pks[j]);
  EXPECT_EQ(PkBundle::decode(pk4.encode()), pk4);
}

TEST(OtpSetup, ExpandIsDeterministic) {
  Key32 seed{};
  seed[0] = 7;
  EXPECT_EQ(otpSetup(OtpSecretKey::expand(seed, 3, 3, 32)), otpSetup(OtpSecretKey::expand(seed, 3, 3, 32)));
}

TEST(OtpReceiver, OneHandlePerCopy) {
  Csprng rng(3);
  QuantumHardware hw;
  const auto pk = otpSetup(OtpSecretKey::generate(rng, 2, 3, 32));
  auto [st, msg] = otpGenReceiverMsg(pk, hw, rng);
  EXPECT_EQ(hw.liveCount(), 6U);
  EXPECT_EQ(msg.size(), 2U);
  EXPECT_EQ(ReceiverMessage::decode(msg.encode()), msg);
}

TEST(OtpSender, PayloadOpensToTheTriple) {
  Csprng rng(4);
  QuantumHardware hw;
  const auto kp = crypt::pkGen(rng);
  const auto g = globalSetupFromKeypair(kp);
  const auto p = progvm::identityProgram(4);
  auto gen = generate(p, 1, 32, g, hw, rng);
  const auto t = crypt::openTriple(kp.msk, *gen.st.ct);
  EXPECT_EQ(t.program, p);
  EXPECT_EQ(t.pk, gen.st.pk.encode());
  EXPECT_EQ(t.ek, otpEvalKeys(gen.sk, gen.st.pk, gen.st.tags).encode());
}

TEST(OtpSender, CorruptedTagRejected) {
  Csprng rng(5);
  QuantumHardware hw;
  const auto g = globalSetup(5);
  const auto sk = OtpSecretKey::generate(rng, 2, 1, 32);
  auto [st, msg] = otpGenReceiverMsg(otpSetup(sk), hw, rng);
  msg.tags[1].parts[0].encOffsets.back() ^= 1;
  EXPECT_EQ(errorOf([&] { otpGenSenderReply(progvm::identityProgram(2), sk, msg, g.mpk, rng); }),
            Errc::TagDecodeFailure);
}

TEST(Oracle, HonestPipelineIdentity) {
  Csprng rng(6);
  QuantumHardware hw;
  const auto g = globalSetup(6);
  auto gen = generate(progvm::identityProgram(4), 3, 32, g, hw, rng);
  const auto y = otpEval(gen.st, BitString::fromString("1010"), g, hw, rng);
  ASSERT_TRUE(y);
  EXPECT_EQ(y->toString(), "1010");
  EXPECT_EQ(hw.liveCount(), 0U);
}

TEST(Oracle, NoiselessEvaluationOnEveryInput) {
  Csprng rng(7);
  QuantumHardware hw;
  const auto g = globalSetup(7);
  for (std::uint64_t x = 0; x < 16; ++x) {
    auto gen = generate(progvm::identityProgram(4), 1, 32, g, hw, rng);
    EXPECT_EQ(otpEval(gen.st, BitString::fromUint(x, 4), g, hw, rng), BitString::fromUint(x, 4));
  }
}

TEST(Oracle, InvalidSignatureGivesBottom) {
  Csprng rng(8);
  QuantumHardware hw;
  const auto g = globalSetup(8);
  auto gen = generate(progvm::identityProgram(3), 3, 32, g, hw, rng);
  auto q = honestQuery(gen, BitString::fromString("011"), hw, rng);
  auto bad = q;
  for (auto& part : bad.sigs[1].parts) part = Gf2Vec::random(32, rng);
  EXPECT_FALSE(g.query(bad).has_value());
  // The same signatures do not verify for the other bit value.
  auto flipped = q;
  flipped.x.set(0, true);
  EXPECT_FALSE(g.query(flipped).has_value());
  EXPECT_TRUE(g.query(q).has_value());
}

TEST(Oracle, StatelessRepliesAreIdentical) {
  Csprng rng(9);
  QuantumHardware hw;
  const auto g = globalSetup(9);
  auto gen = generate(progvm::identityProgram(2), 1, 32, g, hw, rng);
  const auto q = honestQuery(gen, BitString::fromString("01"), hw, rng);
  const auto a1 = g.oracle->queryWire(q.encode());
  const auto a2 = g.oracle->queryWire(q.encode());
  EXPECT_EQ(a1, a2);
  EXPECT_EQ(decodeResponse(a1)->y.toString(), "01");
}

TEST(Oracle, AuxRejectedForPlainPrograms) {
  Csprng rng(10);
  QuantumHardware hw;
  const auto g = globalSetup(10);
  auto gen = generate(progvm::identityProgram(2), 1, 32, g, hw, rng);
  auto q = honestQuery(gen, BitString::fromString("11"), hw, rng);
  q.aux = {1, 2, 3};
  EXPECT_FALSE(g.query(q).has_value());
}

TEST(Oracle, GarbageWireRequestGivesBottom) {
  const auto g = globalSetup(11);
  EXPECT_FALSE(decodeResponse(g.oracle->queryWire(Bytes{1, 2, 3})).has_value());
  EXPECT_FALSE(decodeResponse(g.oracle->queryWire(Bytes{})).has_value());
}

TEST(OtpEval, SecondEvaluationRefused) {
  Csprng rng(12);
  QuantumHardware hw;
  const auto g = globalSetup(12);
  for (int i = 0; i < 100; ++i) {
    auto gen = generate(progvm::identityProgram(4), 1, 32, g, hw, rng);
    const BitString x = BitString::fromUint(rng.below(16), 4);
    auto copy = gen.st;
    EXPECT_TRUE(otpEval(gen.st, x, g, hw, rng));
    BitString x2 = x;
    x2.set(i % 4, !x2[i % 4]);
    EXPECT_EQ(errorOf([&] { otpEval(gen.st, x2, g, hw, rng); }), Errc::AlreadyEvaluated);
    // A retained copy of the classical state holds only spent handles.
    EXPECT_FALSE(otpEval(copy, x2, g, hw, rng).has_value());
  }
}

TEST(Codec, QueryAndAnswerRoundTrip) {
  Csprng rng(13);
  QuantumHardware hw;
  const auto g = globalSetup(13);
  auto gen = generate(progvm::identityProgram(3), 3, 32, g, hw, rng);
  auto q = honestQuery(gen, BitString::fromString("101"), hw, rng);
  q.aux = {9, 9};
  const auto d = OracleQuery::decode(q.encode());
  EXPECT_EQ(d.x, q.x);
  EXPECT_EQ(d.ct, q.ct);
  EXPECT_EQ(d.sigs, q.sigs);
  EXPECT_EQ(d.aux, q.aux);

  Bytes trunc = q.encode();
  trunc.pop_back();
  EXPECT_EQ(errorOf([&] { OracleQuery::decode(trunc); }), Errc::MalformedMessage);

  const OracleAnswer a{BitString::fromString("110"), ChainAdvance{{1, 2}, gen.st.pk}};
  EXPECT_EQ(OracleAnswer::decode(a.encode()), a);
  EXPECT_EQ(decodeResponse(encodeResponse(a)), a);
  EXPECT_EQ(decodeResponse(encodeResponse(std::nullopt)), std::nullopt);
}

// ---- transport ----

using namespace sqcrypt::transport;

TEST(Frame, RoundTrip) {
  Frame f;
  f.session.fill(0xAB);
  f.payload = {1, 2, 3};
  const Bytes wire = frame(f);
  EXPECT_EQ(wire.size(), kHeaderBytes + 3);
  EXPECT_EQ(wire[3], 3);
  EXPECT_EQ(unframe(wire), f);
  Bytes bad = wire;
  bad.pop_back();
  EXPECT_EQ(errorOf([&] { unframe(bad); }), Errc::MalformedMessage);
}

TEST(Frame, OversizeHeaderRejected) {
  Bytes wire(kHeaderBytes, 0);
  const std::uint32_t n = kMaxPayload + 1;
  wire[0] = static_cast<std::uint8_t>(n >> 24);
  wire[1] = static_cast<std::uint8_t>(n >> 16);
  wire[2] = static_cast<std::uint8_t>(n >> 8);
  wire[3] = static_cast<std::uint8_t>(n);
  EXPECT_EQ(errorOf([&] { unframe(wire); }), Errc::FrameTooLarge);
  FrameDecoder d;
  EXPECT_EQ(errorOf([&] { d.feed(wire); }), Errc::FrameTooLarge);
  Frame big;
  big.payload.resize(kMaxPayload + 1);
  EXPECT_EQ(errorOf([&] { frame(big); }), Errc::FrameTooLarge);
}

TEST(FrameDecoder, InterleavedSessionsByteByByte) {
  Csprng rng(20);
  const SessionId a = randomSessionId(rng), b = randomSessionId(rng);
  Bytes stream;
  for (int i = 0; i < 6; ++i) {
    const Bytes f = frame(Frame{i % 2 ? b : a, Bytes(static_cast<std::size_t>(i), static_cast<std::uint8_t>(i))});
    stream.insert(stream.end(), f.begin(), f.end());
  }
  FrameDecoder d;
  for (auto byte : stream) d.feed(ByteView(&byte, 1));
  EXPECT_EQ(d.buffered(), 0U);
  for (int i = 1; i < 6; i += 2) EXPECT_EQ(d.nextFor(b), Bytes(static_cast<std::size_t>(i), static_cast<std::uint8_t>(i)));
  EXPECT_FALSE(d.nextFor(b));
  for (int i = 0; i < 6; i += 2) {
    const auto f = d.next();
    ASSERT_TRUE(f);
    EXPECT_EQ(f->session, a);
    EXPECT_EQ(f->payload.size(), static_cast<std::size_t>(i));
  }
  EXPECT_FALSE(d.next());
}

TEST(Socket, MatchesInProcessAnswers) {
  Csprng rng(21);
  QuantumHardware hw;
  const auto g = globalSetup(21);
  SocketOracleServer server(g.oracle);
  const auto remote = withChannel(g, std::make_shared<SocketChannel>(server.port(), randomSessionId(rng)));
  auto gen = generate(progvm::identityProgram(4), 3, 32, g, hw, rng);
  const auto q = honestQuery(gen, BitString::fromString("0110"), hw, rng);
  const auto viaSocket = remote.query(q);
  EXPECT_EQ(viaSocket, g.query(q));
  ASSERT_TRUE(viaSocket);
  EXPECT_EQ(viaSocket->y.toString(), "0110");
  auto bad = q;
  bad.x.set(0, true);
  EXPECT_FALSE(remote.query(bad).has_value());
  EXPECT_EQ(server.framesServed(), 2U);
}

TEST(Socket, ConcurrentClients) {
  const auto g = globalSetup(22);
  SocketOracleServer server(g.oracle);
  std::vector<std::thread> ts;
  std::atomic<int> bottoms{0};
  for (int t = 0; t < 4; ++t)
    ts.emplace_back([&, t] {
      Csprng rng(22, t);
      SocketChannel ch(server.port(), randomSessionId(rng));
      for (int i = 0; i < 10; ++i) bottoms += !ch.query(OracleQuery{BitString(1), Bytes{1}, {}, {}}).has_value();
    });
  for (auto& th : ts) th.join();
  EXPECT_EQ(bottoms.load(), 40);
  EXPECT_EQ(server.framesServed(), 40U);
}

TEST(Socket, ConnectToClosedPortFails) {
  std::uint16_t port;
  {
    const auto g = globalSetup(23);
    SocketOracleServer server(g.oracle);
    port = server.port();
    server.stop();
  }
  Csprng rng(23);
  EXPECT_EQ(errorOf([&] { SocketChannel ch(port, randomSessionId(rng)); }), Errc::TransportFailure);
}
