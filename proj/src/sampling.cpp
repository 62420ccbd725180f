#include "wmtext/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace wmtext {

void SamplerConfig::validate() const {
  if (mode == Mode::kTopP && !(top_p > 0.0 && top_p <= 1.0)) {
    throw std::invalid_argument("top-p must lie in (0, 1]");
  }
  if (mode == Mode::kTopK && top_k < 1) throw std::invalid_argument("top-k must be >= 1");
}

void truncate_distribution(std::vector<double>& probs, const SamplerConfig& cfg) {
  if (cfg.mode != SamplerConfig::Mode::kTopP && cfg.mode != SamplerConfig::Mode::kTopK) return;
  cfg.validate();
  std::vector<TokenId> order(probs.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return probs[a] > probs[b]; });
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::size_t keep = 0;
  if (cfg.mode == SamplerConfig::Mode::kTopK) {
    keep = std::min(cfg.top_k, order.size());
  } else {
    double cum = 0.0;
    const double target = cfg.top_p * total;
    while (keep < order.size()) {
      cum += probs[order[keep++]];
      if (cum >= target) break;
    }
  }
  double kept = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i >= keep) {
      probs[order[i]] = 0.0;
    } else {
      kept += probs[order[i]];
    }
  }
  if (kept > 0.0) {
    for (double& p : probs) p /= kept;
  }
}

TokenId argmax_token(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("empty distribution");
  return static_cast<TokenId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

TokenId sample_multinomial(std::span<const double> probs, SplitMix64& rng) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("distribution has no mass");
  const double u = rng.next_unit() * total;
  double cum = 0.0;
  TokenId last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last = static_cast<TokenId>(i);
    if (u < cum) return last;
  }
  return last;  // rounding at the upper end
}

TokenId sample_token(std::span<const double> probs, const SamplerConfig& cfg, SplitMix64& rng) {
  if (cfg.mode == SamplerConfig::Mode::kGreedy) return argmax_token(probs);
  return sample_multinomial(probs, rng);
}

void softmax_inplace(std::vector<double>& logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : logits) mx = std::max(mx, l);
  if (std::isinf(mx)) throw std::invalid_argument("softmax over all -inf logits");
  double sum = 0.0;
  for (double& l : logits) {
    l = std::isinf(l) ? 0.0 : std::exp(l - mx);
    sum += l;
  }
  for (double& l : logits) l /= sum;
}

}  // namespace wmtext
