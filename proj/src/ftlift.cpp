#include "sqcrypt/ftlift.hpp"

#include <algorithm>
#include <cmath>

namespace sqcrypt::ftlift {

double binomialTail(std::uint64_t w, double p, std::uint64_t k) {
  require(p >= 0.0 && p <= 1.0, Errc::PreconditionViolated, "probability out of range");
  if (k >= w) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lw = std::lgamma(static_cast<double>(w) + 1.0);
  std::vector<double> terms;
  terms.reserve(k + 1);
  double peak = -INFINITY;
  for (std::uint64_t i = 0; i <= k; ++i) {
    const double di = static_cast<double>(i), dw = static_cast<double>(w);
    double t = lw - std::lgamma(di + 1.0) - std::lgamma(dw - di + 1.0) + di * lp + (dw - di) * lq;
    terms.push_back(t);
    peak = std::max(peak, t);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return std::min(1.0, std::exp(peak) * sum);
}

double majorityFailure(std::uint64_t w, double delta) { return binomialTail(w, 0.5 + delta, w / 2); }

std::uint64_t hoeffdingW(double delta, double eps) {
  auto w = static_cast<std::uint64_t>(std::ceil(std::log(1.0 / eps) / (2.0 * delta * delta)));
  return std::max<std::uint64_t>(1, w | 1U);
}

FTParams ftParams(double delta, double epsTok) {
  require(delta > 0.0 && delta <= 0.5, Errc::PreconditionViolated, "delta must lie in (0, 1/2]");
  require(epsTok > 0.0 && epsTok < 1.0, Errc::PreconditionViolated, "epsTok must lie in (0, 1)");
  const std::uint64_t cap = hoeffdingW(delta, epsTok);
  for (std::uint64_t w = 1; w <= cap; w += 2) {
    const double tail = majorityFailure(w, delta);
    if (tail <= epsTok) return FTParams{static_cast<std::uint32_t>(w), delta, epsTok, tail};
  }
  // Hoeffding guarantees the scan ends by cap; only rounding can get here.
  return FTParams{static_cast<std::uint32_t>(cap), delta, epsTok, majorityFailure(cap, delta)};
}

FTParams ftParamsForW(std::uint32_t w, double delta) {
  require(w % 2 == 1, Errc::PreconditionViolated, "w must be odd");
  const double tail = majorityFailure(w, delta);
  return FTParams{w, delta, tail, tail};
}

bool majority(const std::vector<bool>& verdicts) {
  const auto yes = static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), true));
  return yes >= verdicts.size() / 2 + 1;
}

FTSecretKey FTSecretKey::generate(Csprng& rng, std::size_t w, std::size_t lambda) {
  FTSecretKey sk;
  sk.parts.reserve(w);
  for (std::size_t i = 0; i < w; ++i) sk.parts.push_back(TokenSecretKey::generate(rng, lambda));
  return sk;
}

namespace {

template <typename T, typename Enc>
Bytes encodeList(const std::vector<T>& items, Enc enc) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(items.size()));
  for (const auto& it : items) w.prefixed(enc(it));
  return w.take();
}

template <typename T, typename Dec>
std::vector<T> decodeList(ByteView b, Errc err, Dec dec) {
  ByteReader r(b, err);
  const std::size_t w = r.u16();
  if (w == 0) r.fail("empty bundle");
  std::vector<T> out;
  out.reserve(w);
  for (std::size_t i = 0; i < w; ++i) out.push_back(dec(r.prefixed()));
  r.expectEnd();
  return out;
}

}  // namespace

Bytes FTPublicKey::encode() const {
  return encodeList(parts, [](const TokenPublicKey& p) { return p.encode(); });
}
FTPublicKey FTPublicKey::decode(ByteView b) {
  return {decodeList<TokenPublicKey>(b, Errc::MalformedPk, [](ByteView v) { return TokenPublicKey::decode(v); })};
}

Bytes FTTag::encode() const {
  return encodeList(parts, [](const TokenTag& t) { return t.encOffsets; });
}
FTTag FTTag::decode(ByteView b) {
  return {decodeList<TokenTag>(b, Errc::TagDecodeFailure, [](ByteView v) { return TokenTag{Bytes(v.begin(), v.end())}; })};
}

Bytes FTEvalKey::encode() const {
  return encodeList(parts, [](const EvalKey& e) { return e.encode(); });
}
FTEvalKey FTEvalKey::decode(ByteView b) {
  return {decodeList<EvalKey>(b, Errc::MalformedMessage, [](ByteView v) { return EvalKey::decode(v); })};
}

Bytes FTSignature::encode() const {
  return encodeList(parts, [](const Signature& s) { return cqtok::encodeSignature(s); });
}
FTSignature FTSignature::decode(ByteView b) {
  return {decodeList<Signature>(b, Errc::MalformedMessage, [](ByteView v) { return cqtok::decodeSignature(v); })};
}

FTPublicKey ftSetup(const FTSecretKey& sk) {
  FTPublicKey pk;
  pk.parts.reserve(sk.parts.size());
  for (const auto& part : sk.parts) pk.parts.push_back(cqtok::tokSetup(part));
  return pk;
}

std::pair<FTToken, FTTag> ftRec(const FTPublicKey& pk, Csprng& rng, QuantumHardware& hw) {
  FTToken tok;
  FTTag tag;
  try {
    for (const auto& part : pk.parts) {
      auto [h, t] = cqtok::tokRec(part, rng, hw);
      tok.handles.push_back(h);
      tag.parts.push_back(std::move(t));
    }
  } catch (...) {
    for (auto h : tok.handles) hw.discard(h);
    throw;
  }
  return {std::move(tok), std::move(tag)};
}

FTEvalKey ftSen(const FTSecretKey& sk, const FTPublicKey& pk, const FTTag& tag) {
  require(sk.parts.size() == pk.parts.size(), Errc::PreconditionViolated, "pk width mismatch");
  if (tag.parts.size() != sk.parts.size()) throw Error(Errc::TagDecodeFailure, "tag width mismatch");
  FTEvalKey ek;
  ek.parts.reserve(sk.parts.size());
  for (std::size_t i = 0; i < sk.parts.size(); ++i)
    ek.parts.push_back(cqtok::tokSen(sk.parts[i], pk.parts[i], tag.parts[i]));
  return ek;
}

FTSignature signAllCopies(const FTToken& tok, bool b, QuantumHardware& hw, Csprng& rng) {
  FTSignature sig;
  sig.parts.reserve(tok.handles.size());
  bool spent = false;
  for (auto h : tok.handles) {
    if (auto v = hw.tryMeasure(h, b, rng))
      sig.parts.push_back(*v);
    else
      spent = true;
  }
  if (spent) throw Error(Errc::AlreadyConsumed, "FT token already (partly) used");
  return sig;
}

FTSignature ftSign(const FTParams& params, const FTEvalKey& ek, const FTToken& tok, bool b, QuantumHardware& hw,
                   Csprng& rng) {
  require(tok.handles.size() == params.w && ek.parts.size() == params.w, Errc::PreconditionViolated,
          "token width does not match params");
  return signAllCopies(tok, b, hw, rng);
}

bool ftCV(const FTParams& params, const FTPublicKey& pk, const FTEvalKey& ek, const FTSignature& sig, bool b) {
  const std::size_t w = params.w;
  if (sig.parts.size() != w || pk.parts.size() != w || ek.parts.size() != w) return false;
  std::size_t yes = 0;
  for (std::size_t i = 0; i < w; ++i) yes += cqtok::tokCV(pk.parts[i], ek.parts[i], sig.parts[i], b) ? 1 : 0;
  return yes >= w / 2 + 1;
}

}  // namespace sqcrypt::ftlift
