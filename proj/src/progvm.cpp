#include "sqcrypt/progvm.hpp"

#include <algorithm>

#include "sqcrypt/crypt.hpp"

namespace sqcrypt::progvm {

namespace {

[[noreturn]] void malformed(const char* what) { throw Error(Errc::MalformedProgram, what); }

EvalResult runBytecode(const Program& p, const RamImage& ram0, const BitString& in, std::uint64_t budget) {
  EvalResult res{ram0, BitString(p.mOutputBits)};
  const Bytes& code = p.code;
  std::vector<std::uint8_t> stack;
  stack.reserve(64);
  std::size_t pc = 0;

  auto pop = [&]() -> std::uint8_t {
    if (stack.empty()) malformed("stack underflow");
    std::uint8_t v = stack.back();
    stack.pop_back();
    return v;
  };
  auto push = [&](std::uint8_t v) {
    if (stack.size() >= kMaxStack) malformed("stack overflow");
    stack.push_back(v);
  };
  auto imm8 = [&]() -> std::uint8_t {
    if (pc >= code.size()) malformed("truncated immediate");
    return code[pc++];
  };
  auto imm16 = [&]() -> std::uint16_t {
    if (pc + 2 > code.size()) malformed("truncated immediate");
    auto v = static_cast<std::uint16_t>(code[pc] | (code[pc + 1] << 8));
    pc += 2;
    return v;
  };
  auto target = [&](std::uint16_t at) {
    if (at > code.size()) malformed("jump out of range");
    pc = at;
  };

  for (std::uint64_t steps = 0; pc < code.size(); ++steps) {
    if (steps >= budget) throw Error(Errc::StepBudgetExceeded, "step budget exhausted");
    const auto op = static_cast<Op>(code[pc++]);
    switch (op) {
      case Op::Halt: return res;
      case Op::Push: push(imm8()); break;
      case Op::LoadIn: {
        auto i = imm16();
        if (i >= in.size()) malformed("input index out of range");
        push(in[i] ? 1 : 0);
        break;
      }
      case Op::LoadRam: {
        auto i = imm16();
        if (i >= res.ram.size()) malformed("RAM index out of range");
        push(res.ram[i]);
        break;
      }
      case Op::StoreRam: {
        auto i = imm16();
        if (i >= res.ram.size()) malformed("RAM index out of range");
        res.ram[i] = pop();
        break;
      }
      case Op::And: { auto b = pop(), a = pop(); push(a & b); break; }
      case Op::Or: { auto b = pop(), a = pop(); push(a | b); break; }
      case Op::Xor: { auto b = pop(), a = pop(); push(a ^ b); break; }
      case Op::Not: push(static_cast<std::uint8_t>(~pop())); break;
      case Op::Add: { auto b = pop(), a = pop(); push(static_cast<std::uint8_t>(a + b)); break; }
      case Op::CmpEq: { auto b = pop(), a = pop(); push(a == b); break; }
      case Op::CmpLt: { auto b = pop(), a = pop(); push(a < b); break; }
      case Op::Jump: target(imm16()); break;
      case Op::JumpIf: {
        auto at = imm16();
        if (pop()) target(at);
        break;
      }
      case Op::Emit: {
        auto i = imm16();
        if (i >= res.output.size()) malformed("output index out of range");
        res.output.set(i, pop() & 1U);
        break;
      }
      case Op::Dup: {
        auto v = pop();
        push(v);
        push(v);
        break;
      }
      case Op::Pop: pop(); break;
      case Op::Swap: {
        auto b = pop(), a = pop();
        push(b);
        push(a);
        break;
      }
      case Op::Shl: { auto k = imm8(); push(k >= 8 ? 0 : static_cast<std::uint8_t>(pop() << k)); break; }
      case Op::Shr: { auto k = imm8(); push(k >= 8 ? 0 : static_cast<std::uint8_t>(pop() >> k)); break; }
      default: malformed("unknown opcode");
    }
  }
  return res;
}

struct OtmParams {
  ByteView s0, s1;
};

OtmParams parseOtm(const Program& p) {
  ByteReader r(p.code, Errc::MalformedProgram);
  OtmParams o{r.prefixed(), r.prefixed()};
  r.expectEnd();
  if (o.s0.size() != o.s1.size() || p.nInputBits != 2 || p.mOutputBits != 1 + 8 * o.s0.size() || p.ramSchema != 1)
    malformed("inconsistent OTM program");
  return o;
}

EvalResult runOtm(const Program& p, const RamImage& ram, const BitString& in) {
  const OtmParams o = parseOtm(p);
  EvalResult res{ram, BitString(p.mOutputBits)};
  if (ram[0] != kOtmUnread && ram[0] != kOtmRead) malformed("bad OTM RAM symbol");
  // No input: refuse and keep the RAM symbol.
  if (!in[0] || ram[0] == kOtmRead) return res;
  const BitString secret = BitString::fromBytes(in[1] ? o.s1 : o.s0);
  res.output.set(0, true);
  for (std::size_t i = 0; i < secret.size(); ++i) res.output.set(1 + i, secret[i]);
  res.ram[0] = kOtmRead;
  return res;
}

struct CopyProtParams {
  Program circuit;
  Key32 key{};
  std::uint16_t tokenBits = 256;
};

CopyProtParams parseCopyProt(const Program& p) {
  ByteReader r(p.code, Errc::MalformedProgram);
  CopyProtParams c;
  c.circuit = decodeProgram(r.prefixed());
  c.key = r.array<32>();
  c.tokenBits = r.u16();
  r.expectEnd();
  if (c.tokenBits == 0 || c.tokenBits > 256) malformed("bad token width");
  if (c.circuit.kind != ProgramKind::Bytecode && c.circuit.kind != ProgramKind::NativeNull)
    malformed("copy-protected circuit must be plain");
  if (c.circuit.ramSchema != 0 || p.nInputBits != c.circuit.nInputBits + c.tokenBits ||
      p.mOutputBits != 1 + c.circuit.mOutputBits + c.tokenBits || p.ramSchema != 8)
    malformed("inconsistent copy-protection program");
  return c;
}

EvalResult runCopyProt(const Program& p, const RamImage& ram, const BitString& in, const EvalOptions& opts) {
  const CopyProtParams c = parseCopyProt(p);
  EvalResult res{ram, BitString(p.mOutputBits)};
  const std::int64_t i = copyProtRound(ram);
  if (i == kBricked) return res;
  if (i < 0) malformed("bad copy-protection RAM");
  const std::size_t n = c.circuit.nInputBits;
  if (in.slice(n, c.tokenBits) != copyProtToken(c.key, static_cast<std::uint64_t>(i), c.tokenBits)) {
    res.ram = copyProtRam(kBricked);
    return res;
  }
  const EvalResult inner = evalProgram(c.circuit, {}, in.slice(0, n), opts);
  const BitString tNext = copyProtToken(c.key, static_cast<std::uint64_t>(i) + 1, c.tokenBits);
  res.output.set(0, true);
  for (std::size_t j = 0; j < inner.output.size(); ++j) res.output.set(1 + j, inner.output[j]);
  for (std::size_t j = 0; j < tNext.size(); ++j) res.output.set(1 + inner.output.size() + j, tNext[j]);
  res.ram = copyProtRam(i + 1);
  return res;
}

}  // namespace

EvalResult evalProgram(const Program& p, const RamImage& ram, const BitString& input, const EvalOptions& opts) {
  require(input.size() == p.nInputBits, Errc::PreconditionViolated, "input length does not match program");
  require(ram.size() == p.ramSchema, Errc::PreconditionViolated, "RAM length does not match program");
  switch (p.kind) {
    case ProgramKind::Bytecode: return runBytecode(p, ram, input, opts.stepBudget);
    case ProgramKind::NativeOtm: return runOtm(p, ram, input);
    case ProgramKind::NativeCopyProt: return runCopyProt(p, ram, input, opts);
    case ProgramKind::NativeNull: return {ram, BitString(p.mOutputBits)};
    case ProgramKind::Recursive: malformed("recursive wrapper runs only inside the oracle");
  }
  malformed("unknown program kind");
}

Bytes encodeProgram(const Program& p) {
  ByteWriter w;
  w.u8(kProgramVersion).u8(static_cast<std::uint8_t>(p.kind)).u16(p.nInputBits).u16(p.mOutputBits).u16(p.ramSchema);
  w.prefixed(p.code);
  return w.take();
}

Program decodeProgram(ByteView b) {
  ByteReader r(b, Errc::MalformedProgram);
  if (r.u8() != kProgramVersion) r.fail("unknown program version");
  Program p;
  const std::uint8_t kind = r.u8();
  if (kind > static_cast<std::uint8_t>(ProgramKind::Recursive)) r.fail("unknown program kind");
  p.kind = static_cast<ProgramKind>(kind);
  p.nInputBits = r.u16();
  p.mOutputBits = r.u16();
  p.ramSchema = r.u16();
  ByteView code = r.prefixed();
  p.code.assign(code.begin(), code.end());
  r.expectEnd();
  return p;
}

Assembler& Assembler::loadInputInt(std::uint16_t from, std::uint16_t count) {
  push(0);
  for (std::uint16_t k = 0; k < count; ++k) shl(1).loadIn(static_cast<std::uint16_t>(from + k)).op(Op::Or);
  return *this;
}

Assembler& Assembler::emitInt(std::uint16_t to, std::uint16_t count) {
  for (std::uint16_t k = 0; k < count; ++k)
    op(Op::Dup).shr(static_cast<std::uint8_t>(count - 1 - k)).emit(static_cast<std::uint16_t>(to + k));
  return op(Op::Pop);
}

Program Assembler::build(std::uint16_t n, std::uint16_t m, std::uint16_t ramSchema) const {
  return Program{ProgramKind::Bytecode, code_, n, m, ramSchema};
}

Program identityProgram(std::uint16_t n) {
  Assembler a;
  for (std::uint16_t i = 0; i < n; ++i) a.loadIn(i).emit(i);
  return a.build(n, n, 0);
}

Program accumulatorProgram() {
  Assembler a;
  a.loadRam(0).loadInputInt(0, 4).op(Op::Add).op(Op::Dup).storeRam(0).emitInt(0, 8);
  return a.build(4, 8, 1);
}

Program pointFunction(std::uint8_t point, std::uint16_t n) {
  require(n >= 1 && n <= 8, Errc::PreconditionViolated, "point function width must be 1..8");
  Assembler a;
  a.loadInputInt(0, n).push(point).op(Op::CmpEq).emit(0);
  return a.build(n, 1, 0);
}

Program parityLatchProgram() {
  Assembler a;
  a.loadRam(0);
  for (std::uint16_t i = 0; i < 4; ++i) a.loadIn(i).op(Op::Xor);
  a.op(Op::Dup).storeRam(0).op(Op::Dup).emit(0).loadIn(0).op(Op::And).emit(1);
  return a.build(4, 2, 1);
}

Program maxTrackerProgram() {
  Assembler a;
  a.loadRam(0).loadInputInt(0, 8).op(Op::CmpLt);
  const std::uint16_t jumpToSet = static_cast<std::uint16_t>(a.here() + 1);
  a.jumpIf(0);
  const std::uint16_t jumpToOut = static_cast<std::uint16_t>(a.here() + 1);
  a.jump(0);
  a.patch16(jumpToSet, a.here());
  a.loadInputInt(0, 8).storeRam(0);
  a.patch16(jumpToOut, a.here());
  a.loadRam(0).emitInt(0, 8);
  return a.build(8, 8, 1);
}

Program randomProgram(Csprng& rng, std::uint16_t n, std::uint16_t m, std::uint16_t ramBytes, std::size_t length) {
  Assembler a;
  std::size_t depth = 0;
  auto any = [&](std::uint16_t bound) { return static_cast<std::uint16_t>(rng.below(bound)); };
  static constexpr Op kBinary[] = {Op::And, Op::Or, Op::Xor, Op::Add, Op::CmpEq, Op::CmpLt};
  for (std::size_t step = 0; step < length; ++step) {
    // Shrink the stack when it gets deep so programs stay small.
    const bool canPush = depth < 16;
    switch (rng.below(9)) {
      case 0:
        if (!canPush) break;
        a.push(static_cast<std::uint8_t>(rng()));
        ++depth;
        break;
      case 1:
        if (!canPush || n == 0) break;
        a.loadIn(any(n));
        ++depth;
        break;
      case 2:
        if (!canPush || ramBytes == 0) break;
        a.loadRam(any(ramBytes));
        ++depth;
        break;
      case 3:
        if (depth < 2) break;
        a.op(kBinary[rng.below(std::size(kBinary))]);
        --depth;
        break;
      case 4:
        if (depth < 1) break;
        if (rng.coin())
          a.op(Op::Not);
        else if (rng.coin())
          a.shl(static_cast<std::uint8_t>(rng.below(8)));
        else
          a.shr(static_cast<std::uint8_t>(rng.below(8)));
        break;
      case 5:
      case 6:
        if (depth < 1 || ramBytes == 0) break;
        a.storeRam(any(ramBytes));
        --depth;
        break;
      case 7:
        if (depth < 1 || m == 0) break;
        a.emit(any(m));
        --depth;
        break;
      default:
        if (depth >= 2 && rng.coin()) {
          a.op(Op::Swap);
        } else if (depth >= 1 && canPush) {
          a.op(Op::Dup);
          ++depth;
        }
        break;
    }
  }
  // Every output gets a final write so the full output depends on the run.
  for (std::uint16_t j = 0; j < m; ++j) {
    if (depth == 0) {
      if (ramBytes) a.loadRam(any(ramBytes));
      else if (n) a.loadIn(any(n));
      else a.push(static_cast<std::uint8_t>(rng()));
      ++depth;
    }
    a.emit(j);
    --depth;
  }
  return a.build(n, m, ramBytes);
}

Program nullProgram(std::uint16_t n, std::uint16_t m, std::uint16_t ramSchema) {
  return Program{ProgramKind::NativeNull, {}, n, m, ramSchema};
}

Program otmProgram(ByteView s0, ByteView s1) {
  require(s0.size() == s1.size(), Errc::PreconditionViolated, "OTM secrets must have equal length");
  require(1 + 8 * s0.size() <= 0xFFFF, Errc::PreconditionViolated, "OTM secrets too long");
  ByteWriter w;
  w.prefixed(s0).prefixed(s1);
  return Program{ProgramKind::NativeOtm, w.take(), 2, static_cast<std::uint16_t>(1 + 8 * s0.size()), 1};
}

Program copyProtProgram(const Program& circuit, const Key32& k, std::uint16_t tokenBits) {
  require(circuit.ramSchema == 0, Errc::PreconditionViolated, "copy-protected circuit must be stateless");
  require(tokenBits >= 1 && tokenBits <= 256, Errc::PreconditionViolated, "token width must be 1..256");
  ByteWriter w;
  w.prefixed(encodeProgram(circuit)).raw(k).u16(tokenBits);
  return Program{ProgramKind::NativeCopyProt, w.take(), static_cast<std::uint16_t>(circuit.nInputBits + tokenBits),
                 static_cast<std::uint16_t>(1 + circuit.mOutputBits + tokenBits), 8};
}

BitString copyProtToken(const Key32& k, std::uint64_t round, std::uint16_t tokenBits) {
  return BitString::fromBytes(crypt::prf(k, round)).slice(0, tokenBits);
}

RamImage copyProtRam(std::int64_t round) {
  ByteWriter w;
  w.u64(static_cast<std::uint64_t>(round));
  return w.take();
}

std::int64_t copyProtRound(const RamImage& ram) {
  ByteReader r(ram, Errc::MalformedProgram);
  return static_cast<std::int64_t>(r.u64());
}

}  // namespace sqcrypt::progvm
