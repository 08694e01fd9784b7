#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sqcrypt/apps.hpp"
#include "sqcrypt/transport.hpp"

namespace sqcrypt::harness {

using Json = nlohmann::ordered_json;

enum class Transport { InProc, Socket };
Transport parseTransport(std::string_view s);  // ConfigError
std::string_view transportName(Transport t);

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::uint16_t lambda = 32;
  double delta = 0.1;
  double epsTarget = 1e-3;
  std::uint16_t n = 8;
  std::uint64_t ell = 10;
  std::uint64_t trials = 10'000;
  Transport transport = Transport::InProc;
  std::string outputPath;

  // Per-evaluation failure probability for chain experiments; < 0 means noiseless.
  double pEval = -1.0;
  std::uint16_t bindBits = 16;
  std::uint16_t tokenBits = 256;
  std::string strategy = "forward";
  std::string gameSpec = "skewed";
  unsigned workers = 1;

  Json toJson() const;
};

struct StatReport {
  std::string experiment;
  Json config;
  double empiricalRate = 0.0;
  double bound = 0.0;
  double sigma = 0.0;
  bool pass = false;
  Json details = Json::object();

  Json toJson() const;
  std::string dump() const { return toJson().dump(2) + "\n"; }
  void write(const std::string& path) const;  // ConfigError if unwritable
};

inline double bernoulliSigma(double p, std::uint64_t trials) {
  return trials ? std::sqrt(std::clamp(p, 0.0, 1.0) * (1.0 - std::clamp(p, 0.0, 1.0)) / static_cast<double>(trials))
                : 0.0;
}

// Runs f(i) for i in [0, trials) on `workers` threads and returns the results
// in index order, so aggregation never depends on scheduling.
template <class R, class F>
std::vector<R> runTrials(std::uint64_t trials, unsigned workers, F&& f) {
  std::vector<R> out(trials);
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(trials, 1))));
  if (workers == 1) {
    for (std::uint64_t i = 0; i < trials; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex errMu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::uint64_t i; (i = next.fetch_add(1)) < trials;) {
        try {
          out[i] = f(i);
        } catch (...) {
          std::lock_guard lock(errMu);
          if (!err) err = std::current_exception();
          next.store(trials);
        }
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

// Global setup reached through the configured transport. Owns the socket
// server when there is one.
class Session {
 public:
  Session(std::uint64_t seed, Transport t);
  ~Session();
  const ramobf::GlobalSetup& g() const { return g_; }
  Transport transport() const { return transport_; }

 private:
  Transport transport_;
  ramobf::GlobalSetup g_;
  std::unique_ptr<transport::SocketOracleServer> server_;
};

// Per-token noise that makes one evaluation over `tokens` tokens fail with
// probability pEval.
double perTokenNoise(double pEval, std::size_t tokens);

// ---- experiments ----

// CV acceptance at pFail = 1/2 - delta.
StatReport tokCorrectness(const ExperimentConfig& cfg);
// Majority failure of FT signatures against the exact tail.
StatReport ftMonteCarlo(const ExperimentConfig& cfg);
// Table of minimal w over a (delta, eps) grid, with the fitted constant.
StatReport ftGrid(const ExperimentConfig& cfg);
// Adversarial schedules trying to get both bits signed by one token.
StatReport doubleSign(const ExperimentConfig& cfg);
// Honest one-shot evaluation rate plus second-evaluation adversaries.
StatReport otpRun(const ExperimentConfig& cfg, ramobf::Transcript* log = nullptr);
// Spliced and mutated ciphertexts against a live query.
StatReport cipherBinding(const ExperimentConfig& cfg);
// Accumulator chains: noiseless output check, or failure rate under noise.
StatReport ramRun(const ExperimentConfig& cfg, ramobf::Transcript* log = nullptr);
// Random corpus programs against the reference interpreter.
StatReport ramEquivalence(const ExperimentConfig& cfg);
// Tokens consumed by a chain with w chosen for the whole run.
StatReport ramOverhead(const ExperimentConfig& cfg);
// Honest reads with interleaved ⊥ reads, plus scripted two-secret attacks.
StatReport otmRun(const ExperimentConfig& cfg, ramobf::Transcript* log = nullptr);
// Token-threaded honest chains and permanent bricking.
StatReport cpHonest(const ExperimentConfig& cfg);
// Pirate game for cfg.strategy on cfg.gameSpec; CSV rows to csv if given.
StatReport cpPirate(const ExperimentConfig& cfg, std::ostream* csv = nullptr);

apps::PirateGameSpec gameSpecByName(std::string_view name);  // ConfigError

}  // namespace sqcrypt::harness
