// sqcrypt: command-line driver for the experiments.
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sqcrypt/harness.hpp"

using namespace sqcrypt;
using harness::ExperimentConfig;
using harness::StatReport;

namespace {

struct Common {
  ExperimentConfig cfg;
  std::string transport = "inproc";
  std::string transcriptPath;
};

void addCommon(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.cfg.seed, "RNG seed");
  sub->add_option("--lambda", c.cfg.lambda, "token width (even)");
  sub->add_option("--trials", c.cfg.trials, "Monte Carlo trials");
  sub->add_option("--transport", c.transport, "inproc or socket")->check(CLI::IsMember({"inproc", "socket"}));
  sub->add_option("--out", c.cfg.outputPath, "write the JSON report here");
  sub->add_option("--workers", c.cfg.workers, "worker threads");
}

int finish(const StatReport& r, const ExperimentConfig& cfg) {
  std::cout << r.dump();
  if (!cfg.outputPath.empty()) r.write(cfg.outputPath);
  return r.pass ? 0 : 1;
}

void writeTranscript(const ramobf::Transcript& t, const std::string& path) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::ConfigError, "cannot write transcript to " + path);
  t.writeJsonl(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-quantum token, one-time program and RAM-chain experiments"};
  app.require_subcommand(1);
  Common c;
  bool sweep = false;
  std::string csvPath;

  auto* tok = app.add_subcommand("tok-correctness", "CV acceptance at pFail = 1/2 - delta");
  addCommon(tok, c);
  tok->add_option("--delta", c.cfg.delta, "success advantage");

  auto* ft = app.add_subcommand("ft-calibrate", "minimal odd w and its exact tail");
  ft->add_option("--delta", c.cfg.delta, "success advantage");
  ft->add_option("--eps", c.cfg.epsTarget, "target failure");
  ft->add_flag("--sweep", sweep, "print the (delta, eps) grid");
  ft->add_option("--out", c.cfg.outputPath, "write the JSON report here");

  auto* ftmc = app.add_subcommand("ft-montecarlo", "FT sign failures against the exact tail");
  addCommon(ftmc, c);
  ftmc->add_option("--delta", c.cfg.delta, "success advantage");
  ftmc->add_option("--eps", c.cfg.epsTarget, "target failure");

  auto* otp = app.add_subcommand("otp-run", "one-time program correctness and second-evaluation attacks");
  addCommon(otp, c);
  otp->add_option("--n", c.cfg.n, "input bits");
  otp->add_option("--delta", c.cfg.delta, "success advantage");
  otp->add_option("--eps", c.cfg.epsTarget, "per-token failure target");
  otp->add_option("--transcript", c.transcriptPath, "JSONL transcript of the first generation");

  auto* ram = app.add_subcommand("ram-run", "accumulator chains");
  addCommon(ram, c);
  ram->add_option("--ell", c.cfg.ell, "rounds per chain");
  ram->add_option("--p", c.cfg.pEval, "per-evaluation failure probability (omit for noiseless)");
  ram->add_option("--bind-bits", c.cfg.bindBits, "tag digest width");
  ram->add_option("--transcript", c.transcriptPath, "JSONL transcript of the first chain");

  auto* otm = app.add_subcommand("otm-demo", "one-time memory reads and two-secret attacks");
  addCommon(otm, c);
  otm->add_option("--p", c.cfg.pEval, "per-evaluation failure probability");
  otm->add_option("--bind-bits", c.cfg.bindBits, "tag digest width");
  otm->add_option("--transcript", c.transcriptPath, "JSONL transcript of the first honest read");

  auto* cp = app.add_subcommand("cp-pirate", "copy-protection pirate game");
  addCommon(cp, c);
  cp->add_option("--strategy", c.cfg.strategy, "pirate strategy")
      ->check(CLI::IsMember(apps::pirateNames()));
  cp->add_option("--spec", c.cfg.gameSpec, "skewed or default")->check(CLI::IsMember({"skewed", "default"}));
  cp->add_option("--token-bits", c.cfg.tokenBits, "round token width");
  cp->add_option("--bind-bits", c.cfg.bindBits, "tag digest width");
  cp->add_option("--p", c.cfg.pEval, "per-evaluation failure probability");
  cp->add_option("--csv", csvPath, "per-game CSV log");

  CLI11_PARSE(app, argc, argv);

  try {
    c.cfg.transport = harness::parseTransport(c.transport);
    ramobf::Transcript transcript;
    if (tok->parsed()) return finish(harness::tokCorrectness(c.cfg), c.cfg);
    if (ftmc->parsed()) return finish(harness::ftMonteCarlo(c.cfg), c.cfg);
    if (ft->parsed()) {
      if (sweep) return finish(harness::ftGrid(c.cfg), c.cfg);
      if (!(c.cfg.delta > 0 && c.cfg.delta <= 0.5) || !(c.cfg.epsTarget > 0 && c.cfg.epsTarget < 1))
        throw Error(Errc::ConfigError, "delta must lie in (0, 0.5] and eps in (0, 1)");
      const auto p = ftlift::ftParams(c.cfg.delta, c.cfg.epsTarget);
      const double below = p.w >= 3 ? ftlift::majorityFailure(p.w - 2, c.cfg.delta) : 1.0;
      std::printf("delta=%g eps=%g w=%u tail=%.6e tail(w-2)=%.6e\n", c.cfg.delta, c.cfg.epsTarget, p.w, p.tail,
                  below);
      return 0;
    }
    if (otp->parsed()) {
      const auto r = harness::otpRun(c.cfg, &transcript);
      writeTranscript(transcript, c.transcriptPath);
      return finish(r, c.cfg);
    }
    if (ram->parsed()) {
      const auto r = harness::ramRun(c.cfg, &transcript);
      writeTranscript(transcript, c.transcriptPath);
      return finish(r, c.cfg);
    }
    if (otm->parsed()) {
      const auto r = harness::otmRun(c.cfg, &transcript);
      writeTranscript(transcript, c.transcriptPath);
      return finish(r, c.cfg);
    }
    if (cp->parsed()) {
      std::ofstream csv;
      if (!csvPath.empty()) {
        csv.open(csvPath, std::ios::trunc);
        if (!csv) throw Error(Errc::ConfigError, "cannot write CSV to " + csvPath);
      }
      return finish(harness::cpPirate(c.cfg, csvPath.empty() ? nullptr : &csv), c.cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == Errc::ConfigError ? 2 : 3;
  }
  return 2;
}
