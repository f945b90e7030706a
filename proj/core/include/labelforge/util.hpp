#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace labelforge {

/// Portable, seedable generator. The stream depends only on the seed, never on
/// the standard library, so synthetic data and samples are identical across
/// toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept;

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Mixes several values into a single seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string sha256_hex(std::string_view bytes);

/// Number of Unicode scalar values in a UTF-8 string. Invalid bytes count as
/// one scalar each.
std::size_t utf8_length(std::string_view text) noexcept;

std::string trim(std::string_view text);
/// ASCII lowercase; non-ASCII bytes pass through unchanged.
std::string ascii_lower(std::string_view text);

std::string join(std::span<const std::string> items, std::string_view separator);

/// Orders identifiers so that embedded digit runs compare numerically
/// ("c2" < "c10"). Falls back to byte order on ties.
bool natural_less(std::string_view a, std::string_view b) noexcept;

/// Lowercase alphanumeric tokens of a text.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace labelforge
