#include "sqcrypt/ramobf.hpp"

#include "json.hpp"

namespace sqcrypt::ramobf {

namespace {
constexpr std::uint8_t kWrapperVersion = 1;
}

Bytes RecursiveWrapper::encode() const {
  ByteWriter w;
  w.u8(kWrapperVersion).prefixed(progvm::encodeProgram(inner)).raw(chainKey).u64(round).prefixed(ram).raw(mpk);
  w.u16(params.lambda).u16(params.w).u16(params.bindBits);
  return w.take();
}

RecursiveWrapper RecursiveWrapper::decode(ByteView b) {
  ByteReader r(b, Errc::MalformedProgram);
  if (r.u8() != kWrapperVersion) r.fail("unknown wrapper version");
  RecursiveWrapper w;
  w.inner = progvm::decodeProgram(r.prefixed());
  w.chainKey = r.array<32>();
  w.round = r.u64();
  ByteView ram = r.prefixed();
  w.ram.assign(ram.begin(), ram.end());
  w.mpk = r.array<32>();
  w.params.lambda = r.u16();
  w.params.w = r.u16();
  w.params.bindBits = r.u16();
  r.expectEnd();
  if (w.inner.kind == progvm::ProgramKind::Recursive) r.fail("nested wrapper");
  if (w.ram.size() != w.inner.ramSchema) r.fail("RAM does not match inner program");
  return w;
}

Program RecursiveWrapper::toProgram() const {
  return Program{progvm::ProgramKind::Recursive, encode(), inputBits(), inner.mOutputBits, 0};
}

RecursiveWrapper RecursiveWrapper::fromProgram(const Program& p) {
  if (p.kind != progvm::ProgramKind::Recursive) throw Error(Errc::MalformedProgram, "not a chain wrapper");
  RecursiveWrapper w = decode(p.code);
  if (p.nInputBits != w.inputBits() || p.mOutputBits != w.inner.mOutputBits || p.ramSchema != 0)
    throw Error(Errc::MalformedProgram, "wrapper header mismatch");
  return w;
}

cotp::OtpSecretKey roundKey(const crypt::PrfKey& chainKey, std::uint64_t j, std::uint16_t n,
                            const ChainParams& params) {
  return cotp::OtpSecretKey::expand(crypt::prf(chainKey, j), n, params.w, params.lambda);
}

BitString bindDigest(ByteView nextTags, std::uint16_t bits) {
  require(bits <= 256, Errc::PreconditionViolated, "digest wider than 256 bits");
  return BitString::fromBytes(crypt::hashLabeled("sqcrypt/ram/bind", {nextTags})).slice(0, bits);
}

cotp::OracleAnswer evalWrapper(const RecursiveWrapper& w, const BitString& x, ByteView nextTags, Csprng& rng) {
  const std::uint16_t n = w.inner.nInputBits;
  require(x.size() == w.inputBits(), Errc::IntegrityFailure, "wrapper input width");
  // The signed input commits to the tags; fresh tags cannot reuse signatures.
  require(x.slice(n, w.params.bindBits) == bindDigest(nextTags, w.params.bindBits), Errc::IntegrityFailure,
          "next-round tags do not match the signed digest");
  const progvm::EvalResult res = progvm::evalProgram(w.inner, w.ram, x.slice(0, n));

  const std::uint16_t wrapperN = w.inputBits();
  const cotp::OtpSecretKey skNext = roundKey(w.chainKey, w.round + 1, wrapperN, w.params);
  const PkBundle pkNext = cotp::otpSetup(skNext);
  const cotp::EkBundle ekNext = cotp::otpEvalKeys(skNext, pkNext, cotp::ReceiverMessage::decode(nextTags));

  RecursiveWrapper next = w;
  next.round = w.round + 1;
  next.ram = res.ram;
  cotp::ChainAdvance adv;
  adv.ctNext = crypt::sealTriple(w.mpk, next.toProgram(), pkNext.encode(), ekNext.encode(), rng);
  adv.pkAfterNext = cotp::otpSetup(roundKey(w.chainKey, w.round + 2, wrapperN, w.params));
  return cotp::OracleAnswer{res.output, std::move(adv)};
}

void Transcript::record(std::int64_t round, std::string direction, std::string messageType, std::size_t bytes,
                        std::string outcome) {
  entries_.push_back({round, std::move(direction), std::move(messageType), bytes, std::move(outcome)});
}

std::size_t Transcript::count(std::string_view direction) const {
  std::size_t c = 0;
  for (const auto& e : entries_) c += e.direction == direction;
  return c;
}

void Transcript::writeJsonl(std::ostream& os) const {
  for (const auto& e : entries_) {
    nlohmann::ordered_json j;
    j["round"] = e.round;
    j["direction"] = e.direction;
    j["messageType"] = e.messageType;
    j["byteLength"] = e.byteLength;
    j["outcome"] = e.outcome;
    os << j.dump() << '\n';
  }
}

std::size_t ChainReceiverState::liveTokenCount() const {
  if (dead || current.evaluated) return 0;
  std::size_t c = 0;
  for (const auto& t : current.tokens) c += t.handles.size();
  return c;
}

RoSender::RoSender(const Program& p, RamImage ram0, const Key32& mpk, const ChainParams& params, Csprng& rng) {
  require(p.kind != progvm::ProgramKind::Recursive, Errc::PreconditionViolated, "cannot chain a wrapper");
  require(ram0.size() == p.ramSchema, Errc::PreconditionViolated, "RAM does not match program");
  require(params.w % 2 == 1 && params.bindBits <= 256, Errc::PreconditionViolated, "bad chain parameters");
  wrapper0_.inner = p;
  wrapper0_.chainKey = rng.key32();
  wrapper0_.round = 0;
  wrapper0_.ram = std::move(ram0);
  wrapper0_.mpk = mpk;
  wrapper0_.params = params;
  const std::uint16_t n = wrapper0_.inputBits();
  sk0_ = roundKey(wrapper0_.chainKey, 0, n, params);
  pk0_ = cotp::otpSetup(sk0_);
  pk1_ = cotp::otpSetup(roundKey(wrapper0_.chainKey, 1, n, params));
}

crypt::SealedPayload RoSender::reply(const cotp::ReceiverMessage& tags0, Csprng& rng) const {
  const cotp::EkBundle ek0 = cotp::otpEvalKeys(sk0_, pk0_, tags0);
  return crypt::sealTriple(wrapper0_.mpk, wrapper0_.toProgram(), pk0_.encode(), ek0.encode(), rng);
}

ChainReceiverState roSend(const Program& p, const RamImage& ram0, const GlobalSetup& g, QuantumHardware& hw,
                          Csprng& rng, const ChainParams& params, Transcript* log) {
  ChainReceiverState st;
  st.params = params;
  st.innerInputBits = p.nInputBits;
  {
    RoSender sender(p, ram0, g.mpk, params, rng);
    if (log) log->record(0, "public", "pk0,pk1", sender.pk0().encode().size() + sender.pk1().encode().size());
    auto [recv, msg] = cotp::otpGenReceiverMsg(sender.pk0(), hw, rng);
    const Bytes msgBytes = msg.encode();
    if (log) log->record(0, "receiver->sender", "tags", msgBytes.size());
    // The sender sees only the wire bytes.
    try {
      recv.ct = sender.reply(cotp::ReceiverMessage::decode(msgBytes), rng);
    } catch (...) {
      for (const auto& tok : recv.tokens)
        for (auto h : tok.handles) hw.discard(h);
      throw;
    }
    if (log) log->record(0, "sender->receiver", "ct", recv.ct->size());
    st.current = std::move(recv);
    st.nextPk = sender.pk1();
  }
  return st;
}

std::optional<BitString> roEval(ChainReceiverState& state, const BitString& x, const GlobalSetup& g,
                                QuantumHardware& hw, Csprng& rng, Transcript* log) {
  const auto round = static_cast<std::int64_t>(state.round);
  if (state.dead) {
    if (log) log->record(round, "receiver->oracle", "query", 0, "dead");
    return std::nullopt;
  }
  require(x.size() == state.innerInputBits, Errc::PreconditionViolated, "input width does not match program");
  auto [nextState, nextTags] = cotp::otpGenReceiverMsg(state.nextPk, hw, rng);
  const Bytes aux = nextTags.encode();
  BitString full = x;
  full.append(bindDigest(aux, state.params.bindBits));

  std::optional<cotp::OracleAnswer> ans;
  try {
    ans = cotp::otpEvalWithAux(state.current, full, aux, g, hw, rng);
  } catch (const Error& e) {
    if (e.code() != Errc::AlreadyEvaluated) throw;
  }
  if (log) log->record(round, "receiver->oracle", "query", full.pack().size() + aux.size());
  if (!ans || !ans->next) {
    for (const auto& tok : nextState.tokens)
      for (auto h : tok.handles) hw.discard(h);
    state.dead = true;
    if (log) log->record(round, "oracle->receiver", "answer", 1, "bottom");
    return std::nullopt;
  }
  if (log) log->record(round, "oracle->receiver", "answer", ans->encode().size());
  nextState.ct = std::move(ans->next->ctNext);
  state.current = std::move(nextState);
  state.nextPk = std::move(ans->next->pkAfterNext);
  state.round += 1;
  return std::move(ans->y);
}

double chainFailureBound(std::uint64_t ell, double p) { return std::min(1.0, static_cast<double>(ell) * p); }

}  // namespace sqcrypt::ramobf
