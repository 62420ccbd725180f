#include "wmtext/langmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wmtext/keying.hpp"

namespace wmtext {

namespace {

using RawTable = std::unordered_map<Context, std::unordered_map<TokenId, double>, Context::Hash>;

void accumulate(RawTable& raw, std::span<const TokenSequence> corpus, std::size_t order,
                double weight, std::size_t vocab_size) {
  TokenSequence seq;
  for (const auto& doc : corpus) {
    seq.assign(1, kBosId);
    seq.insert(seq.end(), doc.begin(), doc.end());
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const TokenId tok = seq[i];
      if (tok == kBosId || tok >= vocab_size) {
        throw std::invalid_argument("corpus token " + std::to_string(tok) +
                                    " is reserved or outside the vocabulary");
      }
      const std::size_t max_len = std::min(order, i);
      for (std::size_t len = 0; len <= max_len; ++len) {
        raw[Context(TokenView(seq).subspan(i - len, len))][tok] += weight;
      }
    }
  }
}

Successors freeze(const std::unordered_map<TokenId, double>& row) {
  Successors s;
  s.counts.assign(row.begin(), row.end());
  std::sort(s.counts.begin(), s.counts.end());
  double best = -1.0;
  for (const auto& [tok, c] : s.counts) {
    s.total += c;
    if (c > best) {
      best = c;
      s.mode = tok;
    }
  }
  return s;
}

}  // namespace

Context::Context(TokenView tokens) {
  if (tokens.size() > kMaxLength) throw std::length_error("context longer than maximum order");
  std::copy(tokens.begin(), tokens.end(), ids_.begin());
  len_ = static_cast<std::uint8_t>(tokens.size());
}

std::size_t Context::Hash::operator()(const Context& c) const {
  std::uint64_t h = 0x243F6A8885A308D3ULL ^ c.len_;
  for (std::size_t i = 0; i < c.len_; ++i) h = SplitMix64::mix(h + c.ids_[i]);
  return static_cast<std::size_t>(h);
}

double Successors::count(TokenId token) const {
  auto it = std::lower_bound(counts.begin(), counts.end(), token,
                             [](const auto& e, TokenId t) { return e.first < t; });
  return (it != counts.end() && it->first == token) ? it->second : 0.0;
}

MarkovLM::MarkovLM(std::shared_ptr<const Vocabulary> vocab, std::size_t order, double alpha,
                   std::shared_ptr<const Table> table)
    : vocab_(std::move(vocab)), order_(order), alpha_(alpha), table_(std::move(table)) {}

MarkovLM MarkovLM::train(std::shared_ptr<const Vocabulary> vocab,
                         std::span<const TokenSequence> corpus, std::size_t order, double alpha) {
  if (!vocab || vocab->size() < 2) throw std::invalid_argument("vocabulary must have >= 2 entries");
  if (order > kMaxOrder) throw std::invalid_argument("order exceeds " + std::to_string(kMaxOrder));
  if (!(alpha >= 0.0) || std::isinf(alpha)) throw std::invalid_argument("alpha must be finite and >= 0");
  RawTable raw;
  accumulate(raw, corpus, order, 1.0, vocab->size());
  if (raw.empty()) throw std::invalid_argument("cannot train on an empty corpus");
  auto table = std::make_shared<Table>();
  table->reserve(raw.size());
  for (const auto& [ctx, row] : raw) table->emplace(ctx, freeze(row));
  return MarkovLM(std::move(vocab), order, alpha, std::move(table));
}

MarkovLM MarkovLM::from_table(std::shared_ptr<const Vocabulary> vocab, std::size_t order,
                              double alpha, std::span<const CountEntry> entries) {
  if (!vocab || vocab->size() < 2) throw std::invalid_argument("vocabulary must have >= 2 entries");
  if (order > kMaxOrder) throw std::invalid_argument("order exceeds " + std::to_string(kMaxOrder));
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  RawTable raw;
  for (const auto& e : entries) {
    if (e.context.size() > order || e.token == kBosId || e.token >= vocab->size() ||
        !(e.count >= 0.0)) {
      throw InvariantError("malformed count table entry");
    }
    for (TokenId t : e.context.tokens()) {
      if (t >= vocab->size()) throw InvariantError("count table context outside vocabulary");
    }
    raw[e.context][e.token] += e.count;
  }
  if (!raw.contains(Context{})) throw InvariantError("count table lacks the empty context");
  auto table = std::make_shared<Table>();
  for (const auto& [ctx, row] : raw) table->emplace(ctx, freeze(row));
  return MarkovLM(std::move(vocab), order, alpha, std::move(table));
}

MarkovLM MarkovLM::fine_tune(std::span<const TokenSequence> corpus, double weight) const {
  if (!(weight > 0.0)) throw std::invalid_argument("fine-tune weight must be positive");
  RawTable raw;
  for (const auto& [ctx, succ] : *table_) {
    auto& row = raw[ctx];
    for (const auto& [tok, c] : succ.counts) row[tok] = c;
  }
  accumulate(raw, corpus, order_, weight, vocab_->size());
  auto table = std::make_shared<Table>();
  table->reserve(raw.size());
  for (const auto& [ctx, row] : raw) table->emplace(ctx, freeze(row));
  return MarkovLM(vocab_, order_, alpha_, std::move(table));
}

const Successors& MarkovLM::lookup(TokenView history, std::size_t* matched_length) const {
  std::array<TokenId, Context::kMaxLength> buf{};
  const std::size_t avail = history.size() + 1;  // implicit leading BOS
  for (std::size_t len = std::min(order_, avail); len > 0; --len) {
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t pos = avail - len + i;  // index into BOS + history
      buf[i] = pos == 0 ? kBosId : history[pos - 1];
    }
    if (auto it = table_->find(Context(TokenView(buf.data(), len))); it != table_->end()) {
      if (matched_length) *matched_length = len;
      return it->second;
    }
  }
  if (matched_length) *matched_length = 0;
  return table_->at(Context{});
}

void MarkovLM::next_dist_into(TokenView history, double temperature,
                              NextTokenDistribution& out) const {
  if (!(temperature >= 0.0) || std::isinf(temperature)) throw std::domain_error("temperature must be >= 0");
  const Successors& s = lookup(history);
  const std::size_t v = vocab_->size();
  const double z = s.total + alpha_ * static_cast<double>(v - 1);
  out.assign(v, alpha_ / z);
  out[kBosId] = 0.0;
  for (const auto& [tok, c] : s.counts) out[tok] = (c + alpha_) / z;
  if (temperature == 1.0) return;
  if (temperature == 0.0) {
    const auto mode = std::max_element(out.begin(), out.end()) - out.begin();
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(mode)] = 1.0;
    return;
  }

  const double log_max = std::log(*std::max_element(out.begin(), out.end()));
  double sum = 0.0;
  for (double& p : out) {
    p = p > 0.0 ? std::exp((std::log(p) - log_max) / temperature) : 0.0;
    sum += p;
  }
  for (double& p : out) p /= sum;
}

NextTokenDistribution MarkovLM::next_dist(TokenView history, double temperature) const {
  NextTokenDistribution out;
  next_dist_into(history, temperature, out);
  return out;
}

double MarkovLM::prob(TokenView history, TokenId token) const {
  if (token == kBosId || token >= vocab_->size()) return 0.0;
  const Successors& s = lookup(history);
  const double z = s.total + alpha_ * static_cast<double>(vocab_->size() - 1);
  return (s.count(token) + alpha_) / z;
}

TokenId MarkovLM::greedy_next(TokenView history) const { return lookup(history).mode; }

std::vector<CountEntry> MarkovLM::table() const {
  std::vector<CountEntry> out;
  for (const auto& [ctx, succ] : *table_) {
    for (const auto& [tok, c] : succ.counts) out.push_back({ctx, tok, c});
  }
  std::sort(out.begin(), out.end(), [](const CountEntry& a, const CountEntry& b) {
    if (a.context != b.context) return a.context < b.context;
    return a.token < b.token;
  });
  return out;
}

double completion_entropy(const MarkovLM& lm, TokenView context, TokenView generated,
                          double temperature) {
  if (generated.empty()) throw std::invalid_argument("completion must be nonempty");
  TokenSequence history(context.begin(), context.end());
  NextTokenDistribution dist;
  double h = 0.0;
  for (TokenId tok : generated) {
    lm.next_dist_into(history, temperature, dist);
    const double p = dist.at(tok);
    if (p > 0.0) h -= p * std::log(p);
    history.push_back(tok);
  }
  return h;
}

}  // namespace wmtext
