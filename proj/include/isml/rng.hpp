#pragma once

#include <array>
#include <cstdint>

namespace isml {

/// Philox4x32-10 counter-based generator: a keyed bijection of a 128-bit
/// counter. Any (key, counter) pair can be evaluated independently, so
/// draws do not depend on evaluation order or thread scheduling.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = round(ctr, key);
    }
    return ctr;
  }
};

/// Uniform draws addressed by (seed, a, b, domain). `a` is typically an
/// instance index and `b` a classifier index; `domain` separates unrelated
/// uses of the same indices.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Philox4x32::Counter block(std::uint64_t a, std::uint32_t b,
                                      std::uint32_t domain) const noexcept {
    return Philox4x32::generate(
        {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, domain}, key_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t a, std::uint32_t b, std::uint32_t domain) const noexcept {
    const auto r = block(a, b, domain);
    const std::uint64_t bits = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t bits64(std::uint64_t a, std::uint32_t b,
                                 std::uint32_t domain) const noexcept {
    const auto r = block(a, b, domain);
    return (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  }

 private:
  Philox4x32::Key key_;
};

/// Child seed for a sub-experiment identified by up to three indices.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint32_t b = 0,
                                    std::uint32_t c = 0) noexcept {
  return CounterStream(seed).bits64(a, b, 0x5EED0000U ^ c);
}

}  // namespace isml
