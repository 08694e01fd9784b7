#include <gtest/gtest.h>

#include "sqcrypt/harness.hpp"

using namespace sqcrypt;
using namespace sqcrypt::harness;

namespace {

ExperimentConfig small(std::uint64_t trials) {
  ExperimentConfig c;
  c.trials = trials;
  return c;
}

// Report minus the fields that name the transport.
Json withoutTransport(const StatReport& r) {
  Json j = r.toJson();
  j["config"].erase("transport");
  return j;
}

}  // namespace

TEST(Harness, TransportNames) {
  EXPECT_EQ(parseTransport("socket"), Transport::Socket);
  EXPECT_EQ(transportName(Transport::InProc), "inproc");
  EXPECT_THROW(parseTransport("udp"), Error);
}

TEST(Harness, RunTrialsKeepsIndexOrder) {
  const auto one = runTrials<std::uint64_t>(257, 1, [](std::uint64_t i) { return i * i; });
  const auto four = runTrials<std::uint64_t>(257, 4, [](std::uint64_t i) { return i * i; });
  EXPECT_EQ(one, four);
  EXPECT_EQ(four[16], 256U);
  EXPECT_THROW(runTrials<int>(10, 3,
                              [](std::uint64_t i) -> int {
                                if (i == 5) throw Error(Errc::ConfigError, "boom");
                                return 0;
                              }),
               Error);
}

TEST(Harness, PerTokenNoiseComposes) {
  const double p = perTokenNoise(0.01, 20);
  EXPECT_NEAR(1.0 - std::pow(1.0 - p, 20), 0.01, 1e-12);
  EXPECT_EQ(perTokenNoise(-1.0, 20), 0.0);
  EXPECT_NEAR(bernoulliSigma(0.5, 100), 0.05, 1e-12);
}

TEST(Harness, ConfigErrors) {
  auto c = small(10);
  c.lambda = 31;
  EXPECT_THROW(tokCorrectness(c), Error);
  c = small(0);
  EXPECT_THROW(ramRun(c), Error);
  c = small(10);
  c.delta = 0.7;
  EXPECT_THROW(ftMonteCarlo(c), Error);
  c = small(10);
  c.strategy = "nope";
  EXPECT_THROW(cpPirate(c), Error);
  EXPECT_THROW(gameSpecByName("nope"), Error);
}

TEST(Harness, TokenCorrectnessSmall) {
  const auto r = tokCorrectness(small(2000));
  EXPECT_TRUE(r.pass) << r.dump();
  EXPECT_NEAR(r.bound, 0.6, 1e-4);
}

TEST(Harness, FtGridPasses) {
  const auto r = ftGrid(ExperimentConfig{});
  EXPECT_TRUE(r.pass) << r.dump();
  EXPECT_LE(r.empiricalRate, 0.5);
}

TEST(Harness, SameSeedSameBytes) {
  auto c = small(20);
  c.delta = 0.25;
  EXPECT_EQ(otpRun(c).dump(), otpRun(c).dump());
  auto r = small(30);
  r.pEval = 0.05;
  EXPECT_EQ(ramRun(r).dump(), ramRun(r).dump());
  auto other = r;
  other.seed = 2;
  EXPECT_NE(ramRun(r).empiricalRate, ramRun(other).empiricalRate);
}

TEST(Harness, WorkerCountDoesNotChangeReports) {
  auto c = small(300);
  const auto a = tokCorrectness(c);
  c.workers = 3;
  EXPECT_EQ(a.dump(), tokCorrectness(c).dump());
}

TEST(Harness, SocketMatchesInProcess) {
  auto c = small(10);
  c.delta = 0.25;
  const auto a = otpRun(c);
  c.transport = Transport::Socket;
  const auto b = otpRun(c);
  EXPECT_TRUE(b.pass) << b.dump();
  EXPECT_EQ(withoutTransport(a), withoutTransport(b));

  auto o = small(15);
  const auto oa = otmRun(o);
  o.transport = Transport::Socket;
  EXPECT_EQ(withoutTransport(oa), withoutTransport(otmRun(o)));
}

TEST(Harness, CipherBindingSmall) {
  const auto r = cipherBinding(small(40));
  EXPECT_TRUE(r.pass) << r.dump();
  EXPECT_EQ(r.details["spliceAccepted"], 0);
}

TEST(Harness, TranscriptRecordsFirstChain) {
  auto c = small(3);
  ramobf::Transcript t;
  ramRun(c, &t);
  EXPECT_EQ(t.count("receiver->sender"), 1U);
  EXPECT_EQ(t.count("receiver->oracle"), c.ell);
}

TEST(Harness, ReportWriteFailsOnBadPath) {
  StatReport r;
  EXPECT_THROW(r.write("/nonexistent-dir/x.json"), Error);
}
