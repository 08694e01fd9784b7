#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

#include "sqcrypt/bytes.hpp"

namespace sqcrypt {

// Ensures libsodium is initialised; cheap after the first call.
void ensureSodium();

// Seedable ChaCha20 keystream generator. Every random choice in the library
// is drawn from one of these, passed explicitly, so experiments replay
// bit-identically from (seed, stream).
class Csprng {
 public:
  using result_type = std::uint64_t;

  explicit Csprng(std::uint64_t seed, std::uint64_t stream = 0);
  static Csprng fromKey(const Key32& key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  void fill(std::span<std::uint8_t> out);
  Key32 key32() {
    Key32 k{};
    fill(k);
    return k;
  }

  // Uniform in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  double uniform01();
  bool bernoulli(double p);
  bool coin() { return ((*this)() & 1U) != 0; }

  // Independent child stream; the parent stream is not advanced.
  Csprng fork(std::string_view label) const;

 private:
  explicit Csprng(const Key32& key);
  void refill();

  Key32 key_{};
  std::array<std::uint8_t, 512> buf_{};
  std::size_t pos_ = 512;
  std::uint64_t block_ = 0;
};

}  // namespace sqcrypt
