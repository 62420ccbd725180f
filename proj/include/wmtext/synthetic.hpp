#pragma once

// A seeded first-order "natural language" used to produce unwatermarked
// corpora for desk-scale experiments: every token (and the start marker)
// has a fixed random set of successors with Zipf-distributed weights.

#include <cstdint>
#include <memory>
#include <vector>

#include "wmtext/keying.hpp"
#include "wmtext/vocab.hpp"

namespace wmtext {

struct SyntheticSourceConfig {
  std::size_t vocab_words = 500;
  std::size_t branching = 48;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 7;
};

class SyntheticSource {
 public:
  explicit SyntheticSource(const SyntheticSourceConfig& cfg = {});

  [[nodiscard]] std::shared_ptr<const Vocabulary> vocab() const { return vocab_; }
  [[nodiscard]] const SyntheticSourceConfig& config() const { return cfg_; }

  [[nodiscard]] TokenSequence sample(std::size_t length, SplitMix64& rng) const;
  /// `num_docs` documents of `length` tokens from a stream seeded with `seed`.
  [[nodiscard]] std::vector<TokenSequence> corpus(std::size_t num_docs, std::size_t length,
                                                  std::uint64_t seed) const;

  /// Documents made of one short sampled phrase repeated until `length`
  /// tokens, mimicking list-like formatted text.
  [[nodiscard]] std::vector<TokenSequence> repetitive_corpus(std::size_t num_docs, std::size_t length,
                                                             std::size_t phrase_length,
                                                             std::uint64_t seed) const;

  /// Per-token entropy rate (nats) of the stationary walk, by simulation.
  [[nodiscard]] double entropy_rate(std::size_t steps, std::uint64_t seed) const;

 private:
  struct Row {
    std::vector<TokenId> next;
    std::vector<double> cumulative;  // normalized, last = 1
  };
  TokenId step(TokenId prev, SplitMix64& rng) const;

  SyntheticSourceConfig cfg_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::vector<Row> rows_;  // indexed by previous token id
};

}  // namespace wmtext
