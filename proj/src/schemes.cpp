#include "wmtext/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace wmtext {

const char* scheme_name(Scheme s) { return s == Scheme::kGreenlist ? "greenlist" : "gumbel"; }

Scheme parse_scheme(std::string_view name) {
  if (name == "greenlist") return Scheme::kGreenlist;
  if (name == "gumbel") return Scheme::kGumbel;
  throw std::invalid_argument("unknown scheme: " + std::string(name));
}

std::size_t WatermarkConfig::effective_dim(std::size_t vocab_size) const {
  return dim != 0 ? dim : std::max(num_messages, vocab_size);
}

void WatermarkConfig::validate(std::size_t vocab_size) const {
  if (num_messages < 1) throw std::invalid_argument("number of messages must be >= 1");
  if (!(theta > 0.0)) throw std::invalid_argument("temperature theta must be positive");
  if (scheme == Scheme::kGreenlist) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0, 1)");
    if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
    if (num_messages != 1) throw std::invalid_argument("multi-bit embedding requires the gumbel scheme");
  } else if (effective_dim(vocab_size) < std::max(num_messages, vocab_size)) {
    throw std::invalid_argument("dimension d must be >= max(M, |V|)");
  }
}

double WatermarkConfig::green_rate(std::size_t vocab_size) const {
  return static_cast<double>(greenlist_size(gamma, vocab_size)) / static_cast<double>(vocab_size);
}

double WatermarkConfig::null_mean(std::size_t vocab_size) const {
  return scheme == Scheme::kGreenlist ? green_rate(vocab_size) : 1.0;
}

double WatermarkConfig::null_stddev(std::size_t vocab_size) const {
  if (scheme != Scheme::kGreenlist) return 1.0;
  const double g = green_rate(vocab_size);
  return std::sqrt(g * (1.0 - g));
}

std::uint64_t window_seed(TokenView history, const WatermarkConfig& cfg) {
  const std::size_t k = cfg.window_k;
  if (history.size() >= k) return hash_window(history.subspan(history.size() - k), cfg.key);
  TokenSequence padded(k - history.size(), kBosId);
  padded.insert(padded.end(), history.begin(), history.end());
  return hash_window(padded, cfg.key);
}

std::vector<double> bias_logits_greenlist(std::span<const double> logits, const Greenlist& greenlist,
                                          double delta) {
  std::vector<double> out(logits.begin(), logits.end());
  for (TokenId t : greenlist.members()) {
    if (t < out.size()) out[t] += delta;
  }
  return out;
}

TokenId gumbel_select(std::span<const double> dist, std::span<const double> secret) {
  if (secret.size() < dist.size()) throw std::invalid_argument("secret vector shorter than distribution");
  std::size_t best = dist.size();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (!(dist[v] > 0.0)) continue;
    const double s = std::log(secret[v]) / dist[v];
    if (best == dist.size() || s > best_score) {
      best = v;
      best_score = s;
    }
  }
  if (best == dist.size()) throw std::invalid_argument("gumbel_select: distribution has no mass");
  return static_cast<TokenId>(best);
}

double score_token_greenlist(TokenId token, const Greenlist& greenlist) {
  return greenlist.contains(token) ? 1.0 : 0.0;
}

double score_token_gumbel(double r) { return -std::log1p(-r); }

double score_token_gumbel(TokenId token, std::span<const double> secret) {
  return score_token_gumbel(secret[token]);
}

double score_token_np(double p, double r) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("NP score needs 0 < p <= 1");
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("NP score needs r in (0, 1)");
  return (1.0 / p - 1.0) * std::log(r);
}

double score_token_np(TokenId token, std::span<const double> secret, std::span<const double> dist) {
  return score_token_np(dist[token], secret[token]);
}

double score_token_simplified(double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("simplified score needs r in (0, 1)");
  return std::log(r);
}

double score_token_simplified(TokenId token, std::span<const double> secret) {
  return score_token_simplified(secret[token]);
}

TokenSequence generate(const MarkovLM& lm, TokenView prompt, std::size_t length,
                       const std::optional<WatermarkConfig>& wm, std::size_t message,
                       const SamplerConfig& sampler, GreenlistCache* cache,
                       const StepObserver& observer) {
  if (length < 1) throw std::invalid_argument("generation length must be >= 1");
  sampler.validate();
  const std::size_t vocab = lm.vocab_size();
  std::size_t dim = 0;
  if (wm) {
    wm->validate(vocab);
    if (message >= wm->num_messages) throw std::invalid_argument("message index must be < M");
    dim = wm->effective_dim(vocab);
  } else if (message != 0) {
    throw std::invalid_argument("message requires a watermark");
  }
  const double temperature = wm ? wm->theta : sampler.temperature;

  TokenSequence history(prompt.begin(), prompt.end());
  history.reserve(prompt.size() + length);
  SplitMix64 rng(sampler.rng_seed);
  std::vector<double> dist;
  std::vector<double> secret(vocab);

  for (std::size_t step = 0; step < length; ++step) {
    lm.next_dist_into(history, temperature, dist);
    TokenId next = 0;
    if (!wm) {
      truncate_distribution(dist, sampler);
      next = sample_token(dist, sampler, rng);
    } else if (wm->scheme == Scheme::kGreenlist) {
      const std::uint64_t seed = window_seed(history, *wm);
      std::shared_ptr<const Greenlist> owned;
      const Greenlist* green = nullptr;
      Greenlist local({}, 0);
      if (cache) {
        owned = cache->get(seed, wm->gamma, vocab);
        green = owned.get();
      } else {
        local = derive_greenlist(seed, wm->gamma, vocab);
        green = &local;
      }
      for (double& p : dist) p = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
      dist = bias_logits_greenlist(dist, *green, wm->delta);
      softmax_inplace(dist);
      truncate_distribution(dist, sampler);
      next = sample_token(dist, sampler, rng);
    } else {
      truncate_distribution(dist, sampler);
      const std::uint64_t seed = window_seed(history, *wm);
      for (std::size_t v = 0; v < vocab; ++v) secret[v] = secret_value_at(seed, (v + message) % dim);
      next = gumbel_select(dist, secret);
    }
    if (observer) observer(GenerationStep{dist, next});
    history.push_back(next);
  }
  return TokenSequence(history.begin() + static_cast<std::ptrdiff_t>(prompt.size()), history.end());
}

}  // namespace wmtext
