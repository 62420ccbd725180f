#include "wmtext/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wmtext {

SyntheticSource::SyntheticSource(const SyntheticSourceConfig& cfg)
    : cfg_(cfg), vocab_(std::make_shared<const Vocabulary>(Vocabulary::synthetic(cfg.vocab_words))) {
  if (cfg.vocab_words < 2) throw std::invalid_argument("synthetic source needs >= 2 words");
  if (cfg.branching < 1 || cfg.branching > cfg.vocab_words) {
    throw std::invalid_argument("branching must lie in [1, vocab_words]");
  }
  SplitMix64 rng(cfg.seed);
  const std::size_t v = vocab_->size();
  std::vector<TokenId> pool(cfg.vocab_words);
  std::iota(pool.begin(), pool.end(), TokenId{1});
  rows_.resize(v);
  for (auto& row : rows_) {
    // Partial Fisher-Yates picks `branching` distinct successors.
    for (std::size_t i = 0; i < cfg.branching; ++i) {
      const std::size_t j = i + rng.next() % (pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    row.next.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.branching));
    row.cumulative.resize(cfg.branching);
    double total = 0.0;
    for (std::size_t i = 0; i < cfg.branching; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), cfg.zipf_exponent);
      row.cumulative[i] = total;
    }
    for (double& c : row.cumulative) c /= total;
    row.cumulative.back() = 1.0;
  }
}

TokenId SyntheticSource::step(TokenId prev, SplitMix64& rng) const {
  const Row& row = rows_[prev];
  const double u = rng.next_unit();
  const auto it = std::upper_bound(row.cumulative.begin(), row.cumulative.end(), u);
  return row.next[static_cast<std::size_t>(it - row.cumulative.begin())];
}

TokenSequence SyntheticSource::sample(std::size_t length, SplitMix64& rng) const {
  TokenSequence out;
  out.reserve(length);
  TokenId prev = kBosId;
  for (std::size_t i = 0; i < length; ++i) {
    prev = step(prev, rng);
    out.push_back(prev);
  }
  return out;
}

std::vector<TokenSequence> SyntheticSource::corpus(std::size_t num_docs, std::size_t length,
                                                   std::uint64_t seed) const {
  SplitMix64 rng(seed);
  std::vector<TokenSequence> docs;
  docs.reserve(num_docs);
  for (std::size_t d = 0; d < num_docs; ++d) docs.push_back(sample(length, rng));
  return docs;
}

std::vector<TokenSequence> SyntheticSource::repetitive_corpus(std::size_t num_docs, std::size_t length,
                                                              std::size_t phrase_length,
                                                              std::uint64_t seed) const {
  if (phrase_length < 1) throw std::invalid_argument("phrase length must be >= 1");
  SplitMix64 rng(seed);
  std::vector<TokenSequence> docs;
  docs.reserve(num_docs);
  for (std::size_t d = 0; d < num_docs; ++d) {
    const TokenSequence phrase = sample(phrase_length, rng);
    TokenSequence doc;
    doc.reserve(length);
    while (doc.size() < length) doc.push_back(phrase[doc.size() % phrase_length]);
    docs.push_back(std::move(doc));
  }
  return docs;
}

double SyntheticSource::entropy_rate(std::size_t steps, std::uint64_t seed) const {
  std::vector<double> row_entropy(rows_.size(), 0.0);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    double prev = 0.0;
    for (double c : rows_[r].cumulative) {
      const double p = c - prev;
      if (p > 0.0) row_entropy[r] -= p * std::log(p);
      prev = c;
    }
  }
  SplitMix64 rng(seed);
  TokenId prev = kBosId;
  double h = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    h += row_entropy[prev];
    prev = step(prev, rng);
  }
  return steps ? h / static_cast<double>(steps) : 0.0;
}

}  // namespace wmtext
