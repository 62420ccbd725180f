#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "wmtext/schemes.hpp"
#include "wmtext/specfn.hpp"

namespace wmtext {

/// Exact key for a token tuple (window followed by token).
std::string tuple_key(TokenView window, std::optional<TokenId> token = std::nullopt);

/// Insertion-only memory of (window, token) tuples already encountered.
/// insert() is atomic per tuple, so a shared tape hands each tuple to
/// exactly one caller across threads.
class DedupTape {
 public:
  enum class Scope { kPerDocument, kGlobal };

  explicit DedupTape(Scope scope = Scope::kPerDocument) : scope_(scope) {}
  DedupTape(const DedupTape&) = delete;
  DedupTape& operator=(const DedupTape&) = delete;

  /// True when the tuple was not present before this call.
  bool insert(TokenView window, TokenId token);
  [[nodiscard]] bool contains(TokenView window, TokenId token) const;
  [[nodiscard]] std::size_t size() const;
  void clear();
  [[nodiscard]] Scope scope() const { return scope_; }

 private:
  static constexpr std::size_t kShards = 16;
  struct Shard {
    mutable std::mutex mu;
    std::unordered_set<std::string> seen;
  };
  Shard& shard_for(const std::string& key) const;

  Scope scope_;
  mutable std::array<Shard, kShards> shards_;
};

/// Set of k-token windows (the radioactivity filter and prompt exclusion).
class FilterSet {
 public:
  explicit FilterSet(std::size_t k) : k_(k) {}

  void add(TokenView window);
  /// Adds every length-k run of `tokens`.
  void add_kgrams(TokenView tokens);
  [[nodiscard]] bool contains(TokenView window) const;
  [[nodiscard]] std::size_t k() const { return k_; }
  [[nodiscard]] std::size_t size() const { return windows_.size(); }
  [[nodiscard]] bool empty() const { return windows_.empty(); }
  /// Sorted windows, for serialization.
  [[nodiscard]] std::vector<TokenSequence> windows() const;

 private:
  std::size_t k_;
  std::unordered_set<std::string> windows_;
};

enum class ScoreFunction {
  kStandard,    // greenlist hit / -ln(1 - r)
  kSimplified,  // ln r (gumbel only), lower-gamma p-value
};

struct DetectionReport {
  Scheme scheme = Scheme::kGumbel;
  std::size_t tokens_scored = 0;
  double score = 0.0;
  double pvalue = 1.0;
  double log10_pvalue = 0.0;
  double z_pvalue = 1.0;
  bool empty = true;  // no token was scored
  std::optional<std::size_t> decoded_message;
  std::vector<double> per_message_pvalues;
};

/// Exact and Z-test p-values for a score over `tokens_scored` tokens.
DetectionReport make_report(const WatermarkConfig& cfg, std::size_t vocab_size, ScoreFunction fn,
                            std::size_t tokens_scored, double score);

/// Optional restrictions applied to every candidate tuple, in this order:
/// tape (skip if seen, then record), filter (skip if window absent),
/// exclusion (skip if window present).
struct ScoringRules {
  DedupTape* tape = nullptr;
  const FilterSet* filter = nullptr;
  const FilterSet* exclude = nullptr;

  [[nodiscard]] bool admit(TokenView window, TokenId token) const;
};

/// Running zero-bit score.
class ScoreAccumulator {
 public:
  ScoreAccumulator(const WatermarkConfig& cfg, std::size_t vocab_size,
                   ScoreFunction fn = ScoreFunction::kStandard);

  /// Scores `token` after `window` if the rules admit it; returns whether it was scored.
  bool add(TokenView window, TokenId token, const ScoringRules& rules = {});
  /// Per-token score for the given window and token, without bookkeeping.
  [[nodiscard]] double token_score(TokenView window, TokenId token) const;

  void merge(const ScoreAccumulator& other);
  [[nodiscard]] std::size_t tokens_scored() const { return count_; }
  [[nodiscard]] double score() const { return score_; }
  [[nodiscard]] DetectionReport report() const;

 private:
  WatermarkConfig cfg_;
  std::size_t vocab_size_;
  std::size_t dim_;
  ScoreFunction fn_;
  std::size_t count_ = 0;
  double score_ = 0.0;
};

/// Scores tokens[k..] with windows tokens[t-k..t). `exclude_windows_from`
/// excludes every window that appears as a k-gram of that sequence.
DetectionReport score_text(TokenView tokens, const WatermarkConfig& cfg, std::size_t vocab_size,
                           DedupTape* tape, const FilterSet* filter = nullptr,
                           std::optional<TokenView> exclude_windows_from = std::nullopt,
                           ScoreFunction fn = ScoreFunction::kStandard);

/// Score vector S = sum_t CyclicShift(f(r_t), x_t) over admitted tokens.
class MultibitAccumulator {
 public:
  MultibitAccumulator(const WatermarkConfig& cfg, std::size_t vocab_size);

  bool add(TokenView window, TokenId token, const ScoringRules& rules = {});
  [[nodiscard]] std::span<const double> scores() const { return scores_; }
  [[nodiscard]] std::size_t tokens_scored() const { return count_; }
  [[nodiscard]] DetectionReport report() const;

 private:
  WatermarkConfig cfg_;
  std::size_t dim_;
  std::size_t count_ = 0;
  std::vector<double> scores_;
};

/// Per-message p-values from the first M components, decoded message =
/// argmin, global p-value = 1 - (1 - p_min)^M. Gumbel scheme only.
DetectionReport score_text_multibit(TokenView tokens, const WatermarkConfig& cfg,
                                    std::size_t vocab_size, DedupTape* tape = nullptr);

/// 1 - (1 - fpr)^n, evaluated through log1p/expm1.
specfn::Probability identification_fpr(double fpr, std::size_t n);
/// Same, taking and returning natural logs.
double log_identification_fpr(double log_fpr, std::size_t n);

struct CalibrationRow {
  double level = 0.0;
  double empirical_dedup = 0.0;
  double empirical_raw = 0.0;
};

struct CalibrationResult {
  std::vector<CalibrationRow> rows;
  std::size_t trials = 0;  // documents x keys
  std::vector<double> pvalues_dedup;
  std::vector<double> pvalues_raw;
};

/// Keys used by calibration: `base`, then the splitmix64 stream seeded with
/// it (zeros skipped). Nearby keys would alias windows in the hash.
std::vector<SecretKey> calibration_keys(SecretKey base, std::size_t count);

/// Fraction of (document, key) pairs with p <= level, with a fresh
/// per-document tape and without deduplication.
CalibrationResult calibrate_fpr(std::span<const TokenSequence> corpus, const WatermarkConfig& cfg,
                                std::size_t vocab_size, std::span<const double> levels,
                                std::size_t num_keys = 10);

}  // namespace wmtext
