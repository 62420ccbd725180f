#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "wmtext/keying.hpp"
#include "wmtext/langmodel.hpp"
#include "wmtext/sampling.hpp"

namespace wmtext {

enum class Scheme { kGreenlist, kGumbel };

const char* scheme_name(Scheme s);
Scheme parse_scheme(std::string_view name);

struct WatermarkConfig {
  Scheme scheme = Scheme::kGumbel;
  SecretKey key{kDefaultKey};
  std::size_t window_k = 2;
  double gamma = 0.25;
  double delta = 2.0;
  double theta = 1.0;
  std::size_t dim = 0;  // 0 selects max(num_messages, |V|)
  std::size_t num_messages = 1;

  /// Secret-vector dimension actually used for a vocabulary of `vocab_size`.
  [[nodiscard]] std::size_t effective_dim(std::size_t vocab_size) const;

  /// Throws std::invalid_argument on any violated constraint, including
  /// dim < max(num_messages, |V|) for the Gumbel scheme.
  void validate(std::size_t vocab_size) const;

  /// Probability that a fixed token is green: |G| / |V| with |G| = floor(gamma |V|).
  [[nodiscard]] double green_rate(std::size_t vocab_size) const;

  /// Per-token score mean and standard deviation under H0 (Z-test).
  [[nodiscard]] double null_mean(std::size_t vocab_size) const;
  [[nodiscard]] double null_stddev(std::size_t vocab_size) const;
};

/// Seed for the token following `history`: the hash of its last k tokens,
/// left-padded with the begin-of-sequence id when the history is shorter.
std::uint64_t window_seed(TokenView history, const WatermarkConfig& cfg);

std::vector<double> bias_logits_greenlist(std::span<const double> logits, const Greenlist& greenlist,
                                          double delta);

/// argmax_v r_v^(1/p_v), evaluated as ln(r_v)/p_v over tokens with p_v > 0;
/// lowest id on ties. Throws std::invalid_argument when every p_v is 0.
TokenId gumbel_select(std::span<const double> dist, std::span<const double> secret);

double score_token_greenlist(TokenId token, const Greenlist& greenlist);

/// -ln(1 - r).
double score_token_gumbel(double r);
double score_token_gumbel(TokenId token, std::span<const double> secret);

/// (1/p - 1) ln r. Throws std::domain_error for p <= 0 or r outside (0, 1).
double score_token_np(double p, double r);
double score_token_np(TokenId token, std::span<const double> secret, std::span<const double> dist);

/// ln r. Throws std::domain_error for r outside (0, 1).
double score_token_simplified(double r);
double score_token_simplified(TokenId token, std::span<const double> secret);

/// Per-step view of generation, for callers that need the distributions.
struct GenerationStep {
  std::span<const double> dist;  // distribution the token was drawn from (after truncation)
  TokenId token;
};
using StepObserver = std::function<void(const GenerationStep&)>;

/// Autoregressive generation of `length` tokens after `prompt`.
///
///   no watermark: next_dist at theta, truncate per sampler, sample
///   Greenlist:    logits = ln next_dist, +delta on the greenlist, softmax,
///                 truncate, sample
///   Gumbel:       next_dist at theta, truncate, gumbel_select with the
///                 secret vector shifted by `message`
///
/// Returns only the continuation.
TokenSequence generate(const MarkovLM& lm, TokenView prompt, std::size_t length,
                       const std::optional<WatermarkConfig>& wm, std::size_t message,
                       const SamplerConfig& sampler, GreenlistCache* cache = nullptr,
                       const StepObserver& observer = {});

}  // namespace wmtext
