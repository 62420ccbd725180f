#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "wmtext/types.hpp"
#include "wmtext/vocab.hpp"

namespace wmtext {

/// Probability vector over the vocabulary; entries >= 0, sum 1.
using NextTokenDistribution = std::vector<double>;

/// Fixed-capacity token context used as a count-table key.
class Context {
 public:
  static constexpr std::size_t kMaxLength = 8;

  Context() = default;
  explicit Context(TokenView tokens);

  [[nodiscard]] std::size_t size() const { return len_; }
  [[nodiscard]] TokenView tokens() const { return {ids_.data(), len_}; }

  bool operator==(const Context& o) const { return len_ == o.len_ && ids_ == o.ids_; }
  auto operator<=>(const Context& o) const {
    if (auto c = len_ <=> o.len_; c != 0) return c;
    return ids_ <=> o.ids_;
  }

  struct Hash {
    std::size_t operator()(const Context& c) const;
  };

 private:
  std::array<TokenId, kMaxLength> ids_{};
  std::uint8_t len_ = 0;
};

/// Per-context successor counts, sorted by token id.
struct Successors {
  std::vector<std::pair<TokenId, double>> counts;
  double total = 0.0;
  TokenId mode = kBosId;  // highest count, lowest id on ties

  [[nodiscard]] double count(TokenId token) const;
};

/// One row of the flat count table.
struct CountEntry {
  Context context;
  TokenId token;
  double count;
};

/// Order-n count model with longest-suffix back-off and additive smoothing
/// at the matched level. Every document is implicitly preceded by the
/// begin-of-sequence token, and that token is never predicted.
///
/// Instances are immutable; train/fine_tune return new models.
class MarkovLM {
 public:
  static constexpr std::size_t kMaxOrder = Context::kMaxLength;

  /// Throws std::invalid_argument on an empty corpus, order > kMaxOrder,
  /// negative alpha, or out-of-vocabulary ids.
  static MarkovLM train(std::shared_ptr<const Vocabulary> vocab,
                        std::span<const TokenSequence> corpus, std::size_t order, double alpha);

  static MarkovLM from_table(std::shared_ptr<const Vocabulary> vocab, std::size_t order,
                             double alpha, std::span<const CountEntry> table);

  /// counts + weight * counts(corpus); `this` is unchanged.
  [[nodiscard]] MarkovLM fine_tune(std::span<const TokenSequence> corpus, double weight) const;

  /// Smoothed next-token distribution raised to 1/temperature and normalized.
  /// Temperature 0 is the limit: one-hot at the mode, lowest id on ties.
  [[nodiscard]] NextTokenDistribution next_dist(TokenView history, double temperature = 1.0) const;
  void next_dist_into(TokenView history, double temperature, NextTokenDistribution& out) const;

  /// Smoothed probability of `token` at temperature 1.
  [[nodiscard]] double prob(TokenView history, TokenId token) const;

  /// argmax of next_dist for any temperature; lowest id on ties.
  [[nodiscard]] TokenId greedy_next(TokenView history) const;

  /// Count row used for `history` after back-off, and its context length.
  [[nodiscard]] const Successors& lookup(TokenView history, std::size_t* matched_length = nullptr) const;

  [[nodiscard]] std::size_t order() const { return order_; }
  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] const Vocabulary& vocab() const { return *vocab_; }
  [[nodiscard]] std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }
  [[nodiscard]] std::size_t vocab_size() const { return vocab_->size(); }
  [[nodiscard]] std::size_t num_contexts() const { return table_->size(); }

  /// Flat table sorted by (context, token).
  [[nodiscard]] std::vector<CountEntry> table() const;

 private:
  using Table = std::unordered_map<Context, Successors, Context::Hash>;

  MarkovLM(std::shared_ptr<const Vocabulary> vocab, std::size_t order, double alpha,
           std::shared_ptr<const Table> table);

  std::shared_ptr<const Vocabulary> vocab_;
  std::size_t order_;
  double alpha_;
  std::shared_ptr<const Table> table_;
};

/// H_T = -sum_t p_t ln p_t where p_t is the probability the model gave the
/// token actually emitted at step t (at `temperature`).
double completion_entropy(const MarkovLM& lm, TokenView context, TokenView generated,
                          double temperature = 1.0);

}  // namespace wmtext
