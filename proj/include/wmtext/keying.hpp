#pragma once

// Per-position watermark secrets.
//
// Bit-exact contract (any reimplementation must reproduce these):
//
//   window hash   h = 1; for each token x in the window: h = (h * key + x) mod (2^64 - 1)
//   PRNG          splitmix64 seeded with h; the n-th output (n = 0, 1, ...) is
//                   z = h + (n + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
//                   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//                   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//                   z ^= z >> 31
//   uniform       u = (z >> 11) * 2^-53, in [0, 1)
//   greenlist     perm = [0, |V|); for i = |V|-1 down to 1: j = next() mod (i + 1),
//                 swap(perm[i], perm[j]); greenlist = perm[0 .. floor(gamma |V|))
//   secret vector r[i] = uniform(i-th output), i in [0, d)
//   cyclic shift  shifted[x] = r[(x + m) mod d]

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "wmtext/types.hpp"

namespace wmtext {

class SplitMix64 {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kGolden;
    return mix(state_);
  }

  /// Random-access form: the n-th output of a stream seeded with `seed`.
  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t n) {
    return mix(seed + (n + 1) * kGolden);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double next_unit() { return to_unit(next()); }

  static constexpr double to_unit(std::uint64_t v) {
    return static_cast<double>(v >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Default key for tools and configs. Small keys make the window hash
/// collide (key 1 reduces it to 1 + sum of ids), so it is a large odd constant.
inline constexpr std::uint64_t kDefaultKey = 0xD6E8FEB86659FD93ULL;

class SecretKey {
 public:
  /// Throws std::invalid_argument on 0, which collapses the hash.
  explicit SecretKey(std::uint64_t value);
  [[nodiscard]] std::uint64_t value() const { return value_; }

 private:
  std::uint64_t value_;
};

inline constexpr std::uint64_t kHashModulus = ~std::uint64_t{0};  // 2^64 - 1

std::uint64_t hash_window(TokenView window, SecretKey key);

class Greenlist {
 public:
  Greenlist(std::vector<TokenId> members, std::size_t vocab_size);

  [[nodiscard]] bool contains(TokenId token) const {
    return token < mask_.size() && mask_[token] != 0;
  }
  /// Members in the order produced by the shuffle.
  [[nodiscard]] std::span<const TokenId> members() const { return members_; }
  [[nodiscard]] std::size_t size() const { return members_.size(); }
  [[nodiscard]] std::size_t vocab_size() const { return mask_.size(); }

 private:
  std::vector<TokenId> members_;
  std::vector<std::uint8_t> mask_;
};

std::size_t greenlist_size(double gamma, std::size_t vocab_size);

Greenlist derive_greenlist(std::uint64_t seed, double gamma, std::size_t vocab_size);

/// Membership of a single token without materializing the permutation:
/// follows the token's position through the same shuffle and stops as soon
/// as its side of the partition is decided.
bool greenlist_contains(std::uint64_t seed, double gamma, std::size_t vocab_size, TokenId token);

/// Thread-safe LRU cache of derived greenlists keyed by (seed, gamma, |V|).
class GreenlistCache {
 public:
  explicit GreenlistCache(std::size_t capacity = std::size_t{1} << 16);

  std::shared_ptr<const Greenlist> get(std::uint64_t seed, double gamma, std::size_t vocab_size);

  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::uint64_t hits() const;
  [[nodiscard]] std::uint64_t misses() const;

 private:
  struct Key {
    std::uint64_t seed;
    std::uint64_t gamma_bits;
    std::size_t vocab_size;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  using Entry = std::pair<Key, std::shared_ptr<const Greenlist>>;

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> order_;  // most recent first
  std::unordered_map<Key, std::list<Entry>::iterator, KeyHash> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

using SecretVector = std::vector<double>;

SecretVector derive_secret_vector(std::uint64_t seed, std::size_t dim);

/// Entry `index` of derive_secret_vector(seed, d) for any d > index.
inline double secret_value_at(std::uint64_t seed, std::size_t index) {
  return SplitMix64::to_unit(SplitMix64::at(seed, index));
}

/// Left rotation: out[x] = v[(x + m) mod d]. Throws std::out_of_range if m >= d.
SecretVector cyclic_shift(std::span<const double> vector, std::size_t m);

}  // namespace wmtext
