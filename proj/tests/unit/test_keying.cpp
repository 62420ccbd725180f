#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "wmtext/keying.hpp"

using namespace wmtext;

TEST_CASE("splitmix64 reproduces the golden vectors") {
  std::ifstream in(WMTEXT_TEST_DATA "/splitmix64_golden.txt");
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::uint64_t seed = 0;
    ss >> seed;
    SplitMix64 rng(seed);
    for (std::uint64_t n = 0; n < 4; ++n) {
      std::uint64_t want = 0;
      ss >> want;
      CHECK(SplitMix64::at(seed, n) == want);
      CHECK(rng.next() == want);
    }
    ++rows;
  }
  CHECK(rows == 100);
}

TEST_CASE("uniform conversion keeps the top 53 bits") {
  CHECK(SplitMix64::to_unit(0) == 0.0);
  CHECK(SplitMix64::to_unit(~std::uint64_t{0}) < 1.0);
  CHECK(SplitMix64::to_unit(std::uint64_t{1} << 63) == 0.5);
  CHECK(SplitMix64::to_unit(std::uint64_t{2047}) == 0.0);
}

TEST_CASE("secret key must be nonzero") {
  CHECK_THROWS_AS(SecretKey(0), std::invalid_argument);
  CHECK(SecretKey(5).value() == 5);
}

TEST_CASE("window hash") {
  constexpr std::uint64_t m = kHashModulus;
  const SecretKey key(1234567);
  CHECK(hash_window({}, key) == 1);
  const TokenId x = 42;
  CHECK(hash_window(TokenView(&x, 1), key) == 1234567 + 42);

  // reduction modulo 2^64 - 1 rather than 2^64
  const SecretKey big(m - 1);
  const TokenId five = 5;
  CHECK(hash_window(TokenView(&five, 1), big) == 4);

  const TokenSequence ab{7, 9};
  const unsigned __int128 first = (static_cast<unsigned __int128>(1) * (m - 1) + 7) % m;
  const unsigned __int128 second = (first * (m - 1) + 9) % m;
  CHECK(hash_window(ab, big) == static_cast<std::uint64_t>(second));
  CHECK(hash_window(ab, key) == ((1234567ULL + 7) * 1234567ULL + 9));
}

TEST_CASE("greenlist derivation") {
  CHECK(greenlist_size(0.25, 100) == 25);
  CHECK(greenlist_size(0.5, 5) == 2);
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL, ~0ULL}) {
    const Greenlist g = derive_greenlist(seed, 0.25, 100);
    CHECK(g.size() == 25);
    std::set<TokenId> uniq(g.members().begin(), g.members().end());
    CHECK(uniq.size() == 25);
    CHECK(*uniq.rbegin() < 100);
    const Greenlist again = derive_greenlist(seed, 0.25, 100);
    CHECK(std::equal(g.members().begin(), g.members().end(), again.members().begin()));
  }
  CHECK_THROWS(derive_greenlist(1, 0.25, 1));
  CHECK_THROWS(derive_greenlist(1, 0.0, 10));
  CHECK_THROWS(derive_greenlist(1, 1.0, 10));
}

TEST_CASE("greenlist for seed 1, gamma 0.5, |V| 4 by hand") {
  // splitmix64(1) draws: 10451216379200822465 % 4 = 1, 13757245211066428519 % 3 = 1,
  // 17911839290282890590 % 2 = 0.
  // [0 1 2 3] -swap(3,1)-> [0 3 2 1] -swap(2,1)-> [0 2 3 1] -swap(1,0)-> [2 0 3 1]
  CHECK(SplitMix64::at(1, 0) == 10451216379200822465ULL);
  CHECK(SplitMix64::at(1, 1) == 13757245211066428519ULL);
  CHECK(SplitMix64::at(1, 2) == 17911839290282890590ULL);
  const Greenlist g = derive_greenlist(1, 0.5, 4);
  REQUIRE(g.size() == 2);
  CHECK(g.members()[0] == 2);
  CHECK(g.members()[1] == 0);
  CHECK(g.contains(0));
  CHECK(g.contains(2));
  CHECK_FALSE(g.contains(1));
  CHECK_FALSE(g.contains(3));
  CHECK_FALSE(g.contains(17));
}

TEST_CASE("single-token membership agrees with the full derivation") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    for (std::size_t v : {2u, 3u, 10u, 257u}) {
      for (double gamma : {0.1, 0.25, 0.5, 0.9}) {
        if (greenlist_size(gamma, v) == 0) continue;
        const Greenlist g = derive_greenlist(seed, gamma, v);
        for (TokenId t = 0; t < v; ++t) CHECK(greenlist_contains(seed, gamma, v, t) == g.contains(t));
      }
    }
  }
}

TEST_CASE("greenlist cache") {
  GreenlistCache cache(2);
  const auto a = cache.get(1, 0.25, 50);
  CHECK(cache.misses() == 1);
  CHECK(cache.get(1, 0.25, 50) == a);
  CHECK(cache.hits() == 1);
  cache.get(2, 0.25, 50);
  cache.get(1, 0.5, 50);  // evicts (1, 0.25, 50), the least recently used
  CHECK(cache.size() == 2);
  cache.get(2, 0.25, 50);
  CHECK(cache.hits() == 2);
  cache.get(1, 0.25, 50);
  CHECK(cache.misses() == 4);
  CHECK_THROWS(GreenlistCache(0));
}

TEST_CASE("secret vector") {
  const SecretVector one = derive_secret_vector(123, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == static_cast<double>(SplitMix64::at(123, 0) >> 11) * 0x1.0p-53);
  CHECK(one[0] == doctest::Approx(0.7064912217637067).epsilon(1e-15));

  const SecretVector small = derive_secret_vector(77, 10);
  const SecretVector large = derive_secret_vector(77, 1000);
  CHECK(std::equal(small.begin(), small.end(), large.begin()));
  for (double r : large) {
    CHECK(r >= 0.0);
    CHECK(r < 1.0);
  }
  CHECK(secret_value_at(77, 500) == large[500]);
}

TEST_CASE("cyclic shift") {
  const std::vector<double> v{1, 2, 3};
  CHECK(cyclic_shift(v, 0) == v);
  CHECK(cyclic_shift(v, 1) == std::vector<double>{2, 3, 1});
  CHECK(cyclic_shift(v, 2) == std::vector<double>{3, 1, 2});
  CHECK_THROWS_AS(cyclic_shift(v, 3), std::out_of_range);
}
