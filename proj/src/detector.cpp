#include "wmtext/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "wmtext/parallel.hpp"

namespace wmtext {

std::string tuple_key(TokenView window, std::optional<TokenId> token) {
  std::string key((window.size() + (token ? 1 : 0)) * sizeof(TokenId), '\0');
  if (!window.empty()) std::memcpy(key.data(), window.data(), window.size() * sizeof(TokenId));
  if (token) std::memcpy(key.data() + window.size() * sizeof(TokenId), &*token, sizeof(TokenId));
  return key;
}

DedupTape::Shard& DedupTape::shard_for(const std::string& key) const {
  return shards_[std::hash<std::string>{}(key) % kShards];
}

bool DedupTape::insert(TokenView window, TokenId token) {
  std::string key = tuple_key(window, token);
  Shard& s = shard_for(key);
  std::lock_guard lock(s.mu);
  return s.seen.insert(std::move(key)).second;
}

bool DedupTape::contains(TokenView window, TokenId token) const {
  const std::string key = tuple_key(window, token);
  const Shard& s = shard_for(key);
  std::lock_guard lock(s.mu);
  return s.seen.contains(key);
}

std::size_t DedupTape::size() const {
  std::size_t n = 0;
  for (const auto& s : shards_) {
    std::lock_guard lock(s.mu);
    n += s.seen.size();
  }
  return n;
}

void DedupTape::clear() {
  for (auto& s : shards_) {
    std::lock_guard lock(s.mu);
    s.seen.clear();
  }
}

void FilterSet::add(TokenView window) {
  if (window.size() != k_) throw std::invalid_argument("filter window has the wrong length");
  windows_.insert(tuple_key(window));
}

void FilterSet::add_kgrams(TokenView tokens) {
  if (tokens.size() < k_) return;
  for (std::size_t i = 0; i + k_ <= tokens.size(); ++i) windows_.insert(tuple_key(tokens.subspan(i, k_)));
}

bool FilterSet::contains(TokenView window) const {
  return window.size() == k_ && windows_.contains(tuple_key(window));
}

std::vector<TokenSequence> FilterSet::windows() const {
  std::vector<TokenSequence> out;
  out.reserve(windows_.size());
  for (const auto& key : windows_) {
    TokenSequence w(key.size() / sizeof(TokenId));
    if (!w.empty()) std::memcpy(w.data(), key.data(), key.size());
    out.push_back(std::move(w));
  }
  std::sort(out.begin(), out.end());
  return out;
}

DetectionReport make_report(const WatermarkConfig& cfg, std::size_t vocab_size, ScoreFunction fn,
                            std::size_t tokens_scored, double score) {
  DetectionReport r;
  r.scheme = cfg.scheme;
  r.tokens_scored = tokens_scored;
  r.score = score;
  if (tokens_scored == 0) return r;
  r.empty = false;
  const auto t = static_cast<long long>(tokens_scored);
  specfn::Tail tail;
  double mu = cfg.null_mean(vocab_size);
  double sigma = cfg.null_stddev(vocab_size);
  if (cfg.scheme == Scheme::kGreenlist) {
    tail = specfn::binom_tail(std::llround(score), t, cfg.green_rate(vocab_size));
  } else if (fn == ScoreFunction::kSimplified) {
    tail = specfn::lower_gamma_tail(std::min(score, 0.0), t);
    mu = -1.0;  // ln U has mean -1, variance 1
  } else {
    tail = specfn::gamma_tail(std::max(score, 0.0), t);
  }
  r.pvalue = tail.p;
  r.log10_pvalue = tail.log10();
  const double z = (score - mu * static_cast<double>(t)) / (sigma * std::sqrt(static_cast<double>(t)));
  r.z_pvalue = specfn::z_tail(z).p;
  return r;
}

bool ScoringRules::admit(TokenView window, TokenId token) const {
  if (tape && !tape->insert(window, token)) return false;
  if (filter && !filter->contains(window)) return false;
  if (exclude && exclude->contains(window)) return false;
  return true;
}

ScoreAccumulator::ScoreAccumulator(const WatermarkConfig& cfg, std::size_t vocab_size, ScoreFunction fn)
    : cfg_(cfg), vocab_size_(vocab_size), dim_(cfg.effective_dim(vocab_size)), fn_(fn) {
  cfg.validate(vocab_size);
  if (fn == ScoreFunction::kSimplified && cfg.scheme != Scheme::kGumbel) {
    throw std::invalid_argument("simplified score applies to the gumbel scheme only");
  }
}

double ScoreAccumulator::token_score(TokenView window, TokenId token) const {
  const std::uint64_t seed = hash_window(window, cfg_.key);
  if (cfg_.scheme == Scheme::kGreenlist) {
    return greenlist_contains(seed, cfg_.gamma, vocab_size_, token) ? 1.0 : 0.0;
  }
  if (token >= dim_) throw std::out_of_range("token outside secret-vector dimension");
  const double r = secret_value_at(seed, token);
  return fn_ == ScoreFunction::kSimplified ? score_token_simplified(r) : score_token_gumbel(r);
}

bool ScoreAccumulator::add(TokenView window, TokenId token, const ScoringRules& rules) {
  if (!rules.admit(window, token)) return false;
  score_ += token_score(window, token);
  ++count_;
  return true;
}

void ScoreAccumulator::merge(const ScoreAccumulator& other) {
  score_ += other.score_;
  count_ += other.count_;
}

DetectionReport ScoreAccumulator::report() const { return make_report(cfg_, vocab_size_, fn_, count_, score_); }

DetectionReport score_text(TokenView tokens, const WatermarkConfig& cfg, std::size_t vocab_size,
                           DedupTape* tape, const FilterSet* filter,
                           std::optional<TokenView> exclude_windows_from, ScoreFunction fn) {
  ScoreAccumulator acc(cfg, vocab_size, fn);
  const std::size_t k = cfg.window_k;
  std::optional<FilterSet> exclude;
  if (exclude_windows_from) {
    exclude.emplace(k);
    exclude->add_kgrams(*exclude_windows_from);
  }
  const ScoringRules rules{tape, filter, exclude ? &*exclude : nullptr};
  for (std::size_t t = k; t < tokens.size(); ++t) acc.add(tokens.subspan(t - k, k), tokens[t], rules);
  return acc.report();
}

MultibitAccumulator::MultibitAccumulator(const WatermarkConfig& cfg, std::size_t vocab_size)
    : cfg_(cfg), dim_(cfg.effective_dim(vocab_size)), scores_(dim_, 0.0) {
  cfg.validate(vocab_size);
  if (cfg.scheme != Scheme::kGumbel) throw std::invalid_argument("multi-bit decoding needs the gumbel scheme");
}

bool MultibitAccumulator::add(TokenView window, TokenId token, const ScoringRules& rules) {
  if (!rules.admit(window, token)) return false;
  const std::uint64_t seed = hash_window(window, cfg_.key);
  // Component i collects f(r)[(i + token) mod d].
  const std::size_t offset = token % dim_;
  for (std::size_t i = 0; i < dim_; ++i) {
    std::size_t idx = i + offset;
    if (idx >= dim_) idx -= dim_;
    scores_[i] += score_token_gumbel(secret_value_at(seed, idx));
  }
  ++count_;
  return true;
}

DetectionReport MultibitAccumulator::report() const {
  const std::size_t m = cfg_.num_messages;
  DetectionReport r;
  r.scheme = Scheme::kGumbel;
  r.tokens_scored = count_;
  r.per_message_pvalues.assign(m, 1.0);
  if (count_ == 0) {
    r.decoded_message = 0;
    return r;
  }
  const auto t = static_cast<long long>(count_);
  std::size_t best = 0;
  double best_log = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const specfn::Tail tail = specfn::gamma_tail(scores_[i], t);
    r.per_message_pvalues[i] = tail.p;
    if (i == 0 || tail.log < best_log) {
      best = i;
      best_log = tail.log;
    }
  }
  const auto global = specfn::Tail::from_log(log_identification_fpr(best_log, m));
  r.empty = false;
  r.decoded_message = best;
  r.score = scores_[best];
  r.pvalue = global.p;
  r.log10_pvalue = global.log10();
  const double z = (scores_[best] - static_cast<double>(t)) / std::sqrt(static_cast<double>(t));
  r.z_pvalue = identification_fpr(specfn::z_tail(z).p, m);
  return r;
}

DetectionReport score_text_multibit(TokenView tokens, const WatermarkConfig& cfg, std::size_t vocab_size,
                                    DedupTape* tape) {
  MultibitAccumulator acc(cfg, vocab_size);
  const std::size_t k = cfg.window_k;
  const ScoringRules rules{tape, nullptr, nullptr};
  for (std::size_t t = k; t < tokens.size(); ++t) acc.add(tokens.subspan(t - k, k), tokens[t], rules);
  return acc.report();
}

double log_identification_fpr(double log_fpr, std::size_t n) {
  if (n < 1) throw std::invalid_argument("number of identities must be >= 1");
  if (log_fpr > 0.0 || std::isnan(log_fpr)) throw std::domain_error("log FPR must be <= 0");
  if (n == 1) return log_fpr;
  const double nd = static_cast<double>(n);
  if (log_fpr < -700.0) return log_fpr + std::log(nd);  // first-order term is exact to double precision
  const double fpr = std::exp(log_fpr);
  const double global = -std::expm1(nd * std::log1p(-fpr));
  return std::log(global);
}

specfn::Probability identification_fpr(double fpr, std::size_t n) {
  if (n < 1) throw std::invalid_argument("number of identities must be >= 1");
  if (!(fpr >= 0.0 && fpr <= 1.0)) throw std::domain_error("FPR outside [0, 1]");
  if (fpr == 0.0) return specfn::Probability(0.0);
  return specfn::Probability(-std::expm1(static_cast<double>(n) * std::log1p(-fpr)));
}

std::vector<SecretKey> calibration_keys(SecretKey base, std::size_t count) {
  std::vector<SecretKey> keys;
  if (count > 0) keys.push_back(base);
  for (std::uint64_t n = 0; keys.size() < count; ++n) {
    const std::uint64_t v = SplitMix64::at(base.value(), n);
    if (v != 0) keys.emplace_back(v);
  }
  return keys;
}

CalibrationResult calibrate_fpr(std::span<const TokenSequence> corpus, const WatermarkConfig& cfg,
                                std::size_t vocab_size, std::span<const double> levels,
                                std::size_t num_keys) {
  const auto keys = calibration_keys(cfg.key, num_keys);
  const std::size_t trials = corpus.size() * keys.size();
  CalibrationResult res;
  res.trials = trials;
  res.pvalues_dedup.assign(trials, 1.0);
  res.pvalues_raw.assign(trials, 1.0);
  parallel_for(trials, [&](std::size_t i) {
    WatermarkConfig c = cfg;
    c.key = keys[i % keys.size()];
    const auto& doc = corpus[i / keys.size()];
    DedupTape tape(DedupTape::Scope::kPerDocument);
    res.pvalues_dedup[i] = score_text(doc, c, vocab_size, &tape).pvalue;
    res.pvalues_raw[i] = score_text(doc, c, vocab_size, nullptr).pvalue;
  });
  for (double level : levels) {
    CalibrationRow row;
    row.level = level;
    const auto frac = [&](const std::vector<double>& ps) {
      if (ps.empty()) return 0.0;
      const auto hits = std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= level; });
      return static_cast<double>(hits) / static_cast<double>(ps.size());
    };
    row.empirical_dedup = frac(res.pvalues_dedup);
    row.empirical_raw = frac(res.pvalues_raw);
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace wmtext
