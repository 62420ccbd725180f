#include "wmtext/keying.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wmtext {

SecretKey::SecretKey(std::uint64_t value) : value_(value) {
  if (value == 0) throw std::invalid_argument("secret key must be nonzero");
}

std::uint64_t hash_window(TokenView window, SecretKey key) {
  using u128 = unsigned __int128;
  std::uint64_t h = 1;
  for (TokenId x : window) {
    const u128 next = static_cast<u128>(h) * key.value() + x;
    h = static_cast<std::uint64_t>(next % kHashModulus);
  }
  return h;
}

Greenlist::Greenlist(std::vector<TokenId> members, std::size_t vocab_size)
    : members_(std::move(members)), mask_(vocab_size, 0) {
  for (TokenId t : members_) {
    if (t >= vocab_size) throw std::out_of_range("greenlist member outside vocabulary");
    mask_[t] = 1;
  }
}

std::size_t greenlist_size(double gamma, std::size_t vocab_size) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::domain_error("gamma must lie in (0, 1)");
  return static_cast<std::size_t>(std::floor(gamma * static_cast<double>(vocab_size)));
}

Greenlist derive_greenlist(std::uint64_t seed, double gamma, std::size_t vocab_size) {
  if (vocab_size < 2) throw std::invalid_argument("greenlist needs a vocabulary of at least 2");
  const std::size_t green = greenlist_size(gamma, vocab_size);
  std::vector<TokenId> perm(vocab_size);
  std::iota(perm.begin(), perm.end(), TokenId{0});
  SplitMix64 rng(seed);
  for (std::size_t i = vocab_size - 1; i >= 1; --i) {
    const std::size_t j = rng.next() % (i + 1);
    std::swap(perm[i], perm[j]);
  }
  perm.resize(green);
  return Greenlist(std::move(perm), vocab_size);
}

bool greenlist_contains(std::uint64_t seed, double gamma, std::size_t vocab_size, TokenId token) {
  if (vocab_size < 2) throw std::invalid_argument("greenlist needs a vocabulary of at least 2");
  const std::size_t green = greenlist_size(gamma, vocab_size);
  if (token >= vocab_size) return false;
  std::size_t pos = token;
  SplitMix64 rng(seed);
  // Positions above i are final once step i begins.
  for (std::size_t i = vocab_size - 1; i >= 1; --i) {
    if (i < green) return true;
    const std::size_t j = rng.next() % (i + 1);
    if (pos == i) {
      pos = j;
      if (pos == i) return false;
    } else if (pos == j) {
      return false;  // lands on i >= green
    }
  }
  return pos < green;
}

std::size_t GreenlistCache::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = SplitMix64::mix(k.seed ^ 0x5bd1e995ULL);
  h = SplitMix64::mix(h ^ k.gamma_bits);
  return static_cast<std::size_t>(SplitMix64::mix(h ^ k.vocab_size));
}

GreenlistCache::GreenlistCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("cache capacity must be positive");
}

std::shared_ptr<const Greenlist> GreenlistCache::get(std::uint64_t seed, double gamma,
                                                     std::size_t vocab_size) {
  const Key key{seed, std::bit_cast<std::uint64_t>(gamma), vocab_size};
  {
    std::lock_guard lock(mu_);
    if (auto it = index_.find(key); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      ++hits_;
      return it->second->second;
    }
    ++misses_;
  }
  // Derive outside the lock; a concurrent miss on the same key derives an
  // identical value and the first insert wins.
  auto value = std::make_shared<const Greenlist>(derive_greenlist(seed, gamma, vocab_size));
  std::lock_guard lock(mu_);
  if (auto it = index_.find(key); it != index_.end()) return it->second->second;
  order_.emplace_front(key, value);
  index_.emplace(key, order_.begin());
  if (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return value;
}

std::size_t GreenlistCache::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

std::uint64_t GreenlistCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::uint64_t GreenlistCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

SecretVector derive_secret_vector(std::uint64_t seed, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("secret vector dimension must be >= 1");
  SecretVector r(dim);
  SplitMix64 rng(seed);
  for (double& v : r) v = rng.next_unit();
  return r;
}

SecretVector cyclic_shift(std::span<const double> vector, std::size_t m) {
  const std::size_t d = vector.size();
  if (m >= d) {
    throw std::out_of_range("cyclic shift " + std::to_string(m) + " outside dimension " +
                            std::to_string(d));
  }
  SecretVector out(d);
  for (std::size_t x = 0; x < d; ++x) out[x] = vector[(x + m) % d];
  return out;
}

}  // namespace wmtext
