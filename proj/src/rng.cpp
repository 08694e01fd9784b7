#include "sqcrypt/rng.hpp"

#include <sodium.h>

#include <cmath>
#include <mutex>

namespace sqcrypt {

void ensureSodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw Error(Errc::ConfigError, "libsodium failed to initialise");
  });
}

namespace {

Key32 deriveKey(std::string_view label, ByteView material) {
  ensureSodium();
  Key32 out{};
  crypto_generichash_state st;
  crypto_generichash_init(&st, nullptr, 0, out.size());
  crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(label.data()), label.size());
  crypto_generichash_update(&st, material.data(), material.size());
  crypto_generichash_final(&st, out.data(), out.size());
  return out;
}

}  // namespace

Csprng::Csprng(std::uint64_t seed, std::uint64_t stream) {
  ByteWriter w;
  w.u64(seed).u64(stream);
  key_ = deriveKey("sqcrypt/csprng/seed", w.take());
}

Csprng::Csprng(const Key32& key) : key_(key) {}

Csprng Csprng::fromKey(const Key32& key) {
  ensureSodium();
  return Csprng(deriveKey("sqcrypt/csprng/key", key));
}

void Csprng::refill() {
  static const std::array<std::uint8_t, 512> zeros{};
  static const std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
  crypto_stream_chacha20_xor_ic(buf_.data(), zeros.data(), buf_.size(), nonce.data(), block_, key_.data());
  block_ += buf_.size() / 64;
  pos_ = 0;
}

Csprng::result_type Csprng::operator()() {
  if (pos_ + 8 > buf_.size()) refill();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

void Csprng::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buf_.size()) refill();
    std::size_t n = std::min(out.size() - done, buf_.size() - pos_);
    std::copy_n(buf_.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin() + static_cast<std::ptrdiff_t>(done));
    pos_ += n;
    done += n;
  }
}

std::uint64_t Csprng::below(std::uint64_t n) {
  if (n == 0) throw Error(Errc::PreconditionViolated, "below(0)");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = max() - (max() % n + 1) % n;
  std::uint64_t v;
  do v = (*this)();
  while (v > limit);
  return v % n;
}

double Csprng::uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

bool Csprng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform01() < p;
}

Csprng Csprng::fork(std::string_view label) const {
  ByteWriter w;
  w.raw(key_).raw(asBytes(label));
  return Csprng(deriveKey("sqcrypt/csprng/fork", w.take()));
}

std::string toHex(ByteView bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

Bytes fromHex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::PreconditionViolated, "odd hex length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(Errc::PreconditionViolated, "bad hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

}  // namespace sqcrypt
