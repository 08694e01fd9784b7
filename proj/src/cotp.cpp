#include "sqcrypt/cotp.hpp"

#include "sqcrypt/ramobf.hpp"

namespace sqcrypt::cotp {

OtpSecretKey OtpSecretKey::generate(Csprng& rng, std::size_t n, std::size_t w, std::size_t lambda) {
  require(n >= 1, Errc::PreconditionViolated, "OTP needs at least one input bit");
  OtpSecretKey sk;
  sk.bits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) sk.bits.push_back(FTSecretKey::generate(rng, w, lambda));
  return sk;
}

OtpSecretKey OtpSecretKey::expand(const Key32& seed, std::size_t n, std::size_t w, std::size_t lambda) {
  Csprng rng = Csprng::fromKey(seed);
  return generate(rng, n, w, lambda);
}

namespace {

template <typename T, typename Enc>
Bytes encodeBundle(const std::vector<T>& items, Enc enc) {
  ByteWriter w;
  w.u8(kWireVersion).u16(static_cast<std::uint16_t>(items.size()));
  for (const auto& it : items) w.prefixed(enc(it));
  return w.take();
}

template <typename T, typename Dec>
std::vector<T> decodeBundle(ByteView b, Errc err, Dec dec) {
  ByteReader r(b, err);
  if (r.u8() != kWireVersion) r.fail("unknown bundle version");
  const std::size_t n = r.u16();
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(dec(r.prefixed()));
  r.expectEnd();
  return out;
}

}  // namespace

Bytes PkBundle::encode() const {
  return encodeBundle(pks, [](const FTPublicKey& p) { return p.encode(); });
}
PkBundle PkBundle::decode(ByteView b) {
  return {decodeBundle<FTPublicKey>(b, Errc::MalformedPk, [](ByteView v) { return FTPublicKey::decode(v); })};
}

Bytes EkBundle::encode() const {
  return encodeBundle(eks, [](const FTEvalKey& e) { return e.encode(); });
}
EkBundle EkBundle::decode(ByteView b) {
  return {decodeBundle<FTEvalKey>(b, Errc::MalformedMessage, [](ByteView v) { return FTEvalKey::decode(v); })};
}

Bytes ReceiverMessage::encode() const {
  return encodeBundle(tags, [](const FTTag& t) { return t.encode(); });
}
ReceiverMessage ReceiverMessage::decode(ByteView b) {
  return {decodeBundle<FTTag>(b, Errc::TagDecodeFailure, [](ByteView v) { return FTTag::decode(v); })};
}

Bytes OracleQuery::encode() const {
  ByteWriter w;
  w.u8(kWireVersion).u16(static_cast<std::uint16_t>(x.size())).raw(x.pack()).prefixed(ct);
  for (const auto& s : sigs) w.prefixed(s.encode());
  w.prefixed(aux);
  return w.take();
}

OracleQuery OracleQuery::decode(ByteView b) {
  ByteReader r(b, Errc::MalformedMessage);
  if (r.u8() != kWireVersion) r.fail("unknown query version");
  OracleQuery q;
  const std::size_t n = r.u16();
  q.x = BitString::unpack(r.raw((n + 7) / 8), n);
  ByteView ct = r.prefixed();
  q.ct.assign(ct.begin(), ct.end());
  q.sigs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) q.sigs.push_back(FTSignature::decode(r.prefixed()));
  ByteView aux = r.prefixed();
  q.aux.assign(aux.begin(), aux.end());
  r.expectEnd();
  return q;
}

Bytes OracleAnswer::encode() const {
  ByteWriter w;
  w.u8(kWireVersion).u16(static_cast<std::uint16_t>(y.size())).raw(y.pack());
  w.u8(next ? 1 : 0);
  if (next) w.prefixed(next->ctNext).prefixed(next->pkAfterNext.encode());
  return w.take();
}

OracleAnswer OracleAnswer::decode(ByteView b) {
  ByteReader r(b, Errc::MalformedMessage);
  if (r.u8() != kWireVersion) r.fail("unknown answer version");
  OracleAnswer a;
  const std::size_t m = r.u16();
  a.y = BitString::unpack(r.raw((m + 7) / 8), m);
  const std::uint8_t hasNext = r.u8();
  if (hasNext > 1) r.fail("bad chain flag");
  if (hasNext) {
    ChainAdvance adv;
    ByteView ct = r.prefixed();
    adv.ctNext.assign(ct.begin(), ct.end());
    adv.pkAfterNext = PkBundle::decode(r.prefixed());
    a.next = std::move(adv);
  }
  r.expectEnd();
  return a;
}

Bytes encodeResponse(const std::optional<OracleAnswer>& a) {
  ByteWriter w;
  w.u8(a ? 1 : 0);
  if (a) w.raw(a->encode());
  return w.take();
}

std::optional<OracleAnswer> decodeResponse(ByteView b) {
  ByteReader r(b, Errc::MalformedMessage);
  const std::uint8_t status = r.u8();
  if (status == 0) {
    r.expectEnd();
    return std::nullopt;
  }
  if (status != 1) r.fail("bad response status");
  return OracleAnswer::decode(r.raw(r.remaining()));
}

Oracle::Oracle(crypt::MasterKeypair kp) : kp_(kp) {
  nonceKey_ = crypt::hashLabeled("sqcrypt/oracle/nonce-key", {kp_.msk});
}

std::optional<OracleAnswer> Oracle::query(const OracleQuery& q) const noexcept {
  try {
    return answer(q);
  } catch (...) {
    return std::nullopt;
  }
}

Bytes Oracle::queryWire(ByteView request) const noexcept {
  try {
    return encodeResponse(query(OracleQuery::decode(request)));
  } catch (...) {
    return encodeResponse(std::nullopt);
  }
}

OracleAnswer Oracle::answer(const OracleQuery& q) const {
  const crypt::Triple t = crypt::openTriple(kp_.msk, q.ct);
  const PkBundle pk = PkBundle::decode(t.pk);
  const EkBundle ek = EkBundle::decode(t.ek);
  const std::size_t n = t.program.nInputBits;
  require(q.x.size() == n && q.sigs.size() == n && pk.size() == n && ek.eks.size() == n, Errc::IntegrityFailure,
          "query shape does not match sealed program");
  for (std::size_t i = 0; i < n; ++i) {
    ftlift::FTParams params;
    params.w = static_cast<std::uint32_t>(pk.pks[i].parts.size());
    require(ftlift::ftCV(params, pk.pks[i], ek.eks[i], q.sigs[i], q.x[i]), Errc::IntegrityFailure,
            "signature rejected");
  }
  if (t.program.kind == progvm::ProgramKind::Recursive) {
    // Randomness for resealing is a function of the query, so the oracle
    // stays stateless and repeated queries replay exactly.
    Csprng rng = Csprng::fromKey(crypt::hashLabeled("sqcrypt/oracle/query", {nonceKey_, q.ct, q.x.pack(), q.aux}));
    return ramobf::evalWrapper(ramobf::RecursiveWrapper::fromProgram(t.program), q.x, q.aux, rng);
  }
  require(q.aux.empty(), Errc::IntegrityFailure, "aux only valid for chain wrappers");
  const progvm::RamImage ram(t.program.ramSchema, 0);
  return OracleAnswer{progvm::evalProgram(t.program, ram, q.x).output, std::nullopt};
}

Bytes GlobalSetup::encodeAux() const {
  ByteWriter w;
  w.u8(kWireVersion).raw(mpk);
  return w.take();
}

Key32 GlobalSetup::decodeAux(ByteView b) {
  ByteReader r(b, Errc::MalformedMessage);
  if (r.u8() != kWireVersion) r.fail("unknown aux version");
  Key32 k = r.array<32>();
  r.expectEnd();
  return k;
}

GlobalSetup globalSetup(std::uint64_t seed) {
  Csprng rng(seed, 0x6f7261636c65ULL);
  return globalSetupFromKeypair(crypt::pkGen(rng));
}

GlobalSetup globalSetupFromKeypair(const crypt::MasterKeypair& kp) {
  GlobalSetup g;
  g.oracle = std::make_shared<const Oracle>(kp);
  g.channel = std::make_shared<InProcessChannel>(g.oracle);
  g.mpk = kp.mpk;
  return g;
}

GlobalSetup withChannel(const GlobalSetup& g, std::shared_ptr<OracleChannel> channel) {
  GlobalSetup out = g;
  out.channel = std::move(channel);
  return out;
}

PkBundle otpSetup(const OtpSecretKey& sk) {
  PkBundle pk;
  pk.pks.reserve(sk.bits.size());
  for (const auto& b : sk.bits) pk.pks.push_back(ftlift::ftSetup(b));
  return pk;
}

std::pair<OtpReceiverState, ReceiverMessage> otpGenReceiverMsg(const PkBundle& pk, QuantumHardware& hw, Csprng& rng) {
  require(pk.size() >= 1, Errc::MalformedPk, "empty pk bundle");
  OtpReceiverState st;
  st.pk = pk;
  try {
    for (const auto& p : pk.pks) {
      auto [tok, tag] = ftlift::ftRec(p, rng, hw);
      st.tokens.push_back(std::move(tok));
      st.tags.tags.push_back(std::move(tag));
    }
  } catch (...) {
    for (const auto& tok : st.tokens)
      for (auto h : tok.handles) hw.discard(h);
    throw;
  }
  ReceiverMessage msg = st.tags;
  return {std::move(st), std::move(msg)};
}

EkBundle otpEvalKeys(const OtpSecretKey& sk, const PkBundle& pk, const ReceiverMessage& z) {
  if (z.size() != sk.bits.size()) throw Error(Errc::TagDecodeFailure, "receiver message width mismatch");
  require(pk.size() == sk.bits.size(), Errc::PreconditionViolated, "pk width mismatch");
  EkBundle ek;
  ek.eks.reserve(sk.bits.size());
  for (std::size_t i = 0; i < sk.bits.size(); ++i) ek.eks.push_back(ftlift::ftSen(sk.bits[i], pk.pks[i], z.tags[i]));
  return ek;
}

SealedPayload otpGenSenderReply(const Program& p, const OtpSecretKey& sk, const ReceiverMessage& z, const Key32& mpk,
                                Csprng& rng) {
  require(sk.bits.size() == p.nInputBits, Errc::PreconditionViolated, "one token key per input bit");
  const PkBundle pk = otpSetup(sk);
  const EkBundle ek = otpEvalKeys(sk, pk, z);
  return crypt::sealTriple(mpk, p, pk.encode(), ek.encode(), rng);
}

std::optional<std::vector<FTSignature>> signInput(const PkBundle& pk, const std::vector<FTToken>& tokens,
                                                  const BitString& x, QuantumHardware& hw, Csprng& rng) {
  require(x.size() == tokens.size() && pk.size() == tokens.size(), Errc::PreconditionViolated,
          "input width does not match tokens");
  std::vector<FTSignature> sigs;
  sigs.reserve(tokens.size());
  bool spent = false;
  // Every token is measured even after a failure so nothing stays usable.
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    try {
      sigs.push_back(ftlift::signAllCopies(tokens[i], x[i], hw, rng));
    } catch (const Error& e) {
      if (e.code() != Errc::AlreadyConsumed) throw;
      spent = true;
    }
  }
  if (spent) return std::nullopt;
  return sigs;
}

std::optional<OracleAnswer> otpEvalWithAux(OtpReceiverState& state, const BitString& x, ByteView aux,
                                           const GlobalSetup& g, QuantumHardware& hw, Csprng& rng) {
  if (state.evaluated) throw Error(Errc::AlreadyEvaluated, "one-time program already evaluated");
  require(state.ct.has_value(), Errc::PreconditionViolated, "no sender reply yet");
  state.evaluated = true;
  auto sigs = signInput(state.pk, state.tokens, x, hw, rng);
  if (!sigs) return std::nullopt;
  OracleQuery q{x, *state.ct, std::move(*sigs), Bytes(aux.begin(), aux.end())};
  return g.query(q);
}

std::optional<BitString> otpEval(OtpReceiverState& state, const BitString& x, const GlobalSetup& g,
                                 QuantumHardware& hw, Csprng& rng) {
  auto a = otpEvalWithAux(state, x, {}, g, hw, rng);
  if (!a) return std::nullopt;
  return a->y;
}

}  // namespace sqcrypt::cotp
