#pragma once

#include <cstdint>

#include "sqcrypt/bits.hpp"
#include "sqcrypt/bytes.hpp"
#include "sqcrypt/rng.hpp"

// Deterministic programs run by the oracles: a small stack bytecode plus a
// closed set of native kinds for the one-time-memory and copy-protection
// RAM programs, which need PRF evaluation the bytecode does not expose.
namespace sqcrypt::progvm {

enum class ProgramKind : std::uint8_t {
  Bytecode = 0,
  NativeOtm = 1,
  NativeCopyProt = 2,
  NativeNull = 3,
  // Self-refreshing chain wrapper; only the oracle can run it.
  Recursive = 4,
};

struct Program {
  ProgramKind kind = ProgramKind::Bytecode;
  Bytes code;  // opcodes for Bytecode, parameter blob for the native kinds
  std::uint16_t nInputBits = 0;
  std::uint16_t mOutputBits = 0;
  std::uint16_t ramSchema = 0;  // RAM image length in bytes

  friend bool operator==(const Program&, const Program&) = default;
};

using RamImage = Bytes;

struct EvalResult {
  RamImage ram;
  BitString output;
};

struct EvalOptions {
  std::uint64_t stepBudget = 1'000'000;
};

// Pure and total: the same (program, ram, input) always yields the same
// result or the same error (StepBudgetExceeded, MalformedProgram).
EvalResult evalProgram(const Program& p, const RamImage& ram, const BitString& input,
                       const EvalOptions& opts = {});

inline constexpr std::uint8_t kProgramVersion = 1;

// version u8, kind u8, u16 LE n/m/ramSchema, u32 LE code length, code.
Bytes encodeProgram(const Program& p);
Program decodeProgram(ByteView b);

enum class Op : std::uint8_t {
  Halt = 0x00,
  Push = 0x01,   // imm8
  LoadIn = 0x02, // u16 input bit index -> 0/1
  LoadRam = 0x03,
  StoreRam = 0x04,
  And = 0x05,
  Or = 0x06,
  Xor = 0x07,
  Not = 0x08,
  Add = 0x09,    // mod 256
  CmpEq = 0x0A,
  CmpLt = 0x0B,  // second-from-top < top
  Jump = 0x0C,   // u16 absolute code offset
  JumpIf = 0x0D, // pops; jumps when nonzero
  Emit = 0x0E,   // u16 output bit index <- low bit of popped value
  Dup = 0x0F,
  Pop = 0x10,
  Swap = 0x11,
  Shl = 0x12,    // imm8
  Shr = 0x13,    // imm8
};

inline constexpr std::size_t kMaxStack = 1024;

// Small builder for bytecode programs.
class Assembler {
 public:
  Assembler& op(Op o) {
    code_.push_back(static_cast<std::uint8_t>(o));
    return *this;
  }
  Assembler& push(std::uint8_t v) { return op(Op::Push).imm8(v); }
  Assembler& loadIn(std::uint16_t i) { return op(Op::LoadIn).imm16(i); }
  Assembler& loadRam(std::uint16_t i) { return op(Op::LoadRam).imm16(i); }
  Assembler& storeRam(std::uint16_t i) { return op(Op::StoreRam).imm16(i); }
  Assembler& emit(std::uint16_t i) { return op(Op::Emit).imm16(i); }
  Assembler& jump(std::uint16_t at) { return op(Op::Jump).imm16(at); }
  Assembler& jumpIf(std::uint16_t at) { return op(Op::JumpIf).imm16(at); }
  Assembler& shl(std::uint8_t k) { return op(Op::Shl).imm8(k); }
  Assembler& shr(std::uint8_t k) { return op(Op::Shr).imm8(k); }
  // Pushes the big-endian integer formed by input bits [from, from+count).
  Assembler& loadInputInt(std::uint16_t from, std::uint16_t count);
  // Emits the low `count` bits of the top of stack, MSB first, to outputs
  // [to, to+count), consuming it.
  Assembler& emitInt(std::uint16_t to, std::uint16_t count);

  std::uint16_t here() const { return static_cast<std::uint16_t>(code_.size()); }
  void patch16(std::uint16_t at, std::uint16_t v) {
    code_[at] = static_cast<std::uint8_t>(v);
    code_[at + 1] = static_cast<std::uint8_t>(v >> 8);
  }

  Program build(std::uint16_t n, std::uint16_t m, std::uint16_t ramSchema) const;

 private:
  Assembler& imm8(std::uint8_t v) {
    code_.push_back(v);
    return *this;
  }
  Assembler& imm16(std::uint16_t v) {
    code_.push_back(static_cast<std::uint8_t>(v));
    code_.push_back(static_cast<std::uint8_t>(v >> 8));
    return *this;
  }

  Bytes code_;
};

// Corpus programs.
Program identityProgram(std::uint16_t n);
// RAM (1 byte) += int(4-bit input); outputs the new RAM byte as 8 bits.
Program accumulatorProgram();
// Outputs 1 iff the n-bit input equals `point` (n <= 8).
Program pointFunction(std::uint8_t point, std::uint16_t n = 8);
// RAM-carrying programs used by the equivalence suites.
Program parityLatchProgram();
Program maxTrackerProgram();
// Random straight-line bytecode over n inputs, m outputs and r RAM bytes.
Program randomProgram(Csprng& rng, std::uint16_t n, std::uint16_t m, std::uint16_t ramBytes,
                      std::size_t length);
Program nullProgram(std::uint16_t n, std::uint16_t m, std::uint16_t ramSchema);

// One-time memory: input (present, b); RAM byte 0 = unread, 1 = read.
// Output is an ok bit followed by s_b, or all zeros when refused.
Program otmProgram(ByteView s0, ByteView s1);
inline constexpr std::uint8_t kOtmUnread = 0;
inline constexpr std::uint8_t kOtmRead = 1;

// Copy protection: input x ∥ t; RAM is the round index as an int64 LE, -1
// once bricked. Output is ok ∥ C(x) ∥ t', where round tokens are the first
// tokenBits bits of prf(K, i).
Program copyProtProgram(const Program& circuit, const Key32& k, std::uint16_t tokenBits = 256);
BitString copyProtToken(const Key32& k, std::uint64_t round, std::uint16_t tokenBits = 256);
inline constexpr std::int64_t kBricked = -1;
RamImage copyProtRam(std::int64_t round);
std::int64_t copyProtRound(const RamImage& ram);

}  // namespace sqcrypt::progvm

namespace sqcrypt {
using progvm::Program;
}
