#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmtext/keying.hpp"
#include "wmtext/types.hpp"

namespace wmtext {

struct SamplerConfig {
  enum class Mode { kGreedy, kMultinomial, kTopP, kTopK };

  Mode mode = Mode::kMultinomial;
  double top_p = 1.0;
  std::size_t top_k = 0;
  std::uint64_t rng_seed = 0;
  double temperature = 1.0;  // used only when no watermark supplies theta

  static SamplerConfig greedy() { return {Mode::kGreedy, 1.0, 0, 0, 1.0}; }
  static SamplerConfig multinomial(std::uint64_t seed) { return {Mode::kMultinomial, 1.0, 0, seed, 1.0}; }
  static SamplerConfig nucleus(double p, std::uint64_t seed) { return {Mode::kTopP, p, 0, seed, 1.0}; }
  static SamplerConfig top_k_of(std::size_t k, std::uint64_t seed) { return {Mode::kTopK, 1.0, k, seed, 1.0}; }

  /// Throws std::invalid_argument unless 0 < top_p <= 1 (top-p) and top_k >= 1 (top-k).
  void validate() const;
};

/// Zeroes everything outside the top-p nucleus or the top-k set (no-op for
/// greedy/multinomial) and renormalizes. Candidates are ranked by
/// probability, lowest id first on ties; the nucleus is the shortest prefix
/// whose cumulative mass reaches p.
void truncate_distribution(std::vector<double>& probs, const SamplerConfig& cfg);

/// Lowest-id argmax.
TokenId argmax_token(std::span<const double> probs);

/// Inverse-CDF draw in id order using one uniform from `rng`.
TokenId sample_multinomial(std::span<const double> probs, SplitMix64& rng);

/// Greedy picks the argmax; all other modes draw from the (already truncated)
/// distribution.
TokenId sample_token(std::span<const double> probs, const SamplerConfig& cfg, SplitMix64& rng);

/// In-place softmax of logits; -inf entries become 0.
void softmax_inplace(std::vector<double>& logits);

}  // namespace wmtext
