#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wmtext/detector.hpp"
#include "wmtext/langmodel.hpp"
#include "wmtext/schemes.hpp"

namespace wmtext {

enum class ModelAccess { kOpen, kClosed };

struct RadioactivitySetting {
  ModelAccess model_access = ModelAccess::kClosed;
  double supervision = 1.0;  // d = |D^A| / |retained outputs|
  double rho = 1.0;          // share of the suspect's fine-tuning data that is watermarked

  void validate() const;
};

struct RadioactivityReport {
  RadioactivitySetting setting;
  std::size_t documents = 0;         // prompts or probe texts consumed
  std::size_t tokens_generated = 0;  // closed access only
  std::size_t tokens_scored = 0;
  double score = 0.0;
  double pvalue = 1.0;
  double log10_pvalue = 0.0;
  std::vector<double> per_chunk_pvalues;
};

struct RadioactivityOptions {
  std::size_t token_budget = 0;  // stop after this many scored tokens (0: no cap)
  std::size_t num_chunks = 10;
  bool dedup = true;
};

/// Every k-gram of the corpus (k >= 1).
FilterSet build_filter(std::span<const TokenSequence> corpus, std::size_t k);

/// Closed access: sample unwatermarked continuations from the suspect and
/// score them with a global tape, the optional filter, and exclusion of the
/// prompt's own k-grams. Prompt i uses sampler seed mix(rng_seed + i).
RadioactivityReport detect_closed(const MarkovLM& suspect, std::span<const TokenSequence> prompts,
                                  const WatermarkConfig& cfg, const FilterSet* filter,
                                  std::size_t gen_length, const SamplerConfig& sampler,
                                  const RadioactivityOptions& opts = {},
                                  const RadioactivitySetting& setting = {});

/// Unwatermarked completions of every prompt; prompt i uses sampler seed
/// mix(rng_seed + i), as in detect_closed.
std::vector<TokenSequence> sample_completions(const MarkovLM& suspect, std::span<const TokenSequence> prompts,
                                              std::size_t gen_length, const SamplerConfig& sampler);

/// The scoring half of detect_closed, for completions sampled beforehand.
RadioactivityReport score_closed(std::span<const TokenSequence> prompts, std::span<const TokenSequence> completions,
                                 const WatermarkConfig& cfg, std::size_t vocab_size, const FilterSet* filter,
                                 const RadioactivityOptions& opts = {}, const RadioactivitySetting& setting = {});

/// Open access (reading mode): forward each probe text through the suspect
/// and score its greedy next-token prediction against the input window.
/// Windows already seen earlier in the same text are skipped, and a global
/// tape deduplicates (window, prediction) pairs across texts.
RadioactivityReport detect_open_reading(const MarkovLM& suspect, std::span<const TokenSequence> probe_texts,
                                        const WatermarkConfig& cfg, const FilterSet* filter = nullptr,
                                        const RadioactivityOptions& opts = {},
                                        RadioactivitySetting setting = {ModelAccess::kOpen, 1.0, 1.0});

/// Optional per-document divisor applied to the loss (e.g. a compression entropy).
using MiaCalibration = std::function<double(TokenView)>;

/// Mean negative log-likelihood per token under the suspect.
double mean_nll(const MarkovLM& lm, TokenView doc);

/// Two-sample K-S test between per-document losses of the two corpora.
specfn::KsResult mia_ks_baseline(const MarkovLM& suspect, std::span<const TokenSequence> held_in,
                                 std::span<const TokenSequence> held_out,
                                 const MiaCalibration& calibration = {});

/// Fisher combination of the reports' p-values.
specfn::Probability combine_languages(std::span<const RadioactivityReport> reports);

/// Suspect fine-tuning data: round(rho * total) watermarked documents
/// followed by unwatermarked ones, total = watermarked.size().
std::vector<TokenSequence> mix_training_data(std::span<const TokenSequence> watermarked,
                                             std::span<const TokenSequence> clean, double rho);

}  // namespace wmtext
