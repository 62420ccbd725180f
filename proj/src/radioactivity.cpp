#include "wmtext/radioactivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wmtext/parallel.hpp"

namespace wmtext {

namespace {

constexpr std::size_t kGenerationBatch = 64;

// Splits the per-token scores into `chunks` contiguous runs of (almost)
// equal size and tests each run separately.
std::vector<double> chunk_pvalues(const WatermarkConfig& cfg, std::size_t vocab_size,
                                  const std::vector<double>& token_scores, std::size_t chunks) {
  std::vector<double> out;
  if (chunks == 0 || token_scores.empty()) return out;
  const std::size_t n = token_scores.size();
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t begin = c * n / chunks;
    const std::size_t end = (c + 1) * n / chunks;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += token_scores[i];
    out.push_back(make_report(cfg, vocab_size, ScoreFunction::kStandard, end - begin, s).pvalue);
  }
  return out;
}

RadioactivityReport finish(const WatermarkConfig& cfg, std::size_t vocab_size, const RadioactivitySetting& setting,
                           const std::vector<double>& token_scores, std::size_t chunks) {
  RadioactivityReport r;
  r.setting = setting;
  r.tokens_scored = token_scores.size();
  for (double s : token_scores) r.score += s;
  const DetectionReport d = make_report(cfg, vocab_size, ScoreFunction::kStandard, r.tokens_scored, r.score);
  r.pvalue = d.pvalue;
  r.log10_pvalue = d.log10_pvalue;
  r.per_chunk_pvalues = chunk_pvalues(cfg, vocab_size, token_scores, chunks);
  return r;
}

bool budget_reached(const RadioactivityOptions& opts, std::size_t scored) {
  return opts.token_budget != 0 && scored >= opts.token_budget;
}

}  // namespace

void RadioactivitySetting::validate() const {
  if (!(supervision >= 0.0 && supervision <= 1.0)) throw std::invalid_argument("supervision d outside [0, 1]");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho outside [0, 1]");
}

FilterSet build_filter(std::span<const TokenSequence> corpus, std::size_t k) {
  if (k < 1) throw std::invalid_argument("filter window k must be >= 1");
  FilterSet f(k);
  for (const auto& doc : corpus) f.add_kgrams(doc);
  return f;
}

namespace {

// Scores suspect outputs one document at a time with a tape shared across
// documents, so documents must arrive in input order.
class ClosedScorer {
 public:
  ClosedScorer(const WatermarkConfig& cfg, std::size_t vocab_size, const FilterSet* filter,
               const RadioactivityOptions& opts)
      : cfg_(cfg), vocab_size_(vocab_size), filter_(filter), opts_(opts), scorer_(cfg, vocab_size), tape_(DedupTape::Scope::kGlobal) {
    if (filter && filter->k() != cfg.window_k) throw std::invalid_argument("filter k differs from window k");
  }

  [[nodiscard]] bool done() const { return budget_reached(opts_, token_scores_.size()); }

  void add(const TokenSequence& prompt, const TokenSequence& completion) {
    const std::size_t k = cfg_.window_k;
    TokenSequence full(prompt);
    full.insert(full.end(), completion.begin(), completion.end());
    FilterSet exclude(k);
    exclude.add_kgrams(prompt);
    const ScoringRules rules{opts_.dedup ? &tape_ : nullptr, filter_, &exclude};
    ++documents_;
    tokens_generated_ += completion.size();
    for (std::size_t t = std::max(prompt.size(), k); t < full.size() && !done(); ++t) {
      const TokenView window = TokenView(full).subspan(t - k, k);
      if (!rules.admit(window, full[t])) continue;
      token_scores_.push_back(scorer_.token_score(window, full[t]));
    }
  }

  [[nodiscard]] RadioactivityReport finish(const RadioactivitySetting& setting) const {
    RadioactivityReport r = wmtext::finish(cfg_, vocab_size_, setting, token_scores_, opts_.num_chunks);
    r.documents = documents_;
    r.tokens_generated = tokens_generated_;
    return r;
  }

 private:
  const WatermarkConfig& cfg_;
  std::size_t vocab_size_;
  const FilterSet* filter_;
  const RadioactivityOptions& opts_;
  ScoreAccumulator scorer_;
  DedupTape tape_;
  std::vector<double> token_scores_;
  std::size_t documents_ = 0;
  std::size_t tokens_generated_ = 0;
};

void sample_range(const MarkovLM& suspect, std::span<const TokenSequence> prompts, std::size_t begin,
                  std::size_t gen_length, const SamplerConfig& sampler, std::vector<TokenSequence>& out) {
  parallel_for(out.size(), [&](std::size_t j) {
    SamplerConfig s = sampler;
    s.rng_seed = SplitMix64::mix(sampler.rng_seed + begin + j);
    out[j] = generate(suspect, prompts[begin + j], gen_length, std::nullopt, 0, s);
  });
}

}  // namespace

std::vector<TokenSequence> sample_completions(const MarkovLM& suspect, std::span<const TokenSequence> prompts,
                                              std::size_t gen_length, const SamplerConfig& sampler) {
  std::vector<TokenSequence> out(prompts.size());
  sample_range(suspect, prompts, 0, gen_length, sampler, out);
  return out;
}

RadioactivityReport score_closed(std::span<const TokenSequence> prompts, std::span<const TokenSequence> completions,
                                 const WatermarkConfig& cfg, std::size_t vocab_size, const FilterSet* filter,
                                 const RadioactivityOptions& opts, const RadioactivitySetting& setting) {
  setting.validate();
  cfg.validate(vocab_size);
  if (prompts.size() != completions.size()) throw std::invalid_argument("one completion per prompt expected");
  ClosedScorer scorer(cfg, vocab_size, filter, opts);
  for (std::size_t i = 0; i < prompts.size() && !scorer.done(); ++i) scorer.add(prompts[i], completions[i]);
  return scorer.finish(setting);
}

RadioactivityReport detect_closed(const MarkovLM& suspect, std::span<const TokenSequence> prompts,
                                  const WatermarkConfig& cfg, const FilterSet* filter,
                                  std::size_t gen_length, const SamplerConfig& sampler,
                                  const RadioactivityOptions& opts, const RadioactivitySetting& setting) {
  setting.validate();
  cfg.validate(suspect.vocab_size());
  ClosedScorer scorer(cfg, suspect.vocab_size(), filter, opts);
  std::vector<TokenSequence> completions;
  for (std::size_t start = 0; start < prompts.size() && !scorer.done(); start += kGenerationBatch) {
    completions.resize(std::min(prompts.size(), start + kGenerationBatch) - start);
    sample_range(suspect, prompts, start, gen_length, sampler, completions);
    for (std::size_t j = 0; j < completions.size() && !scorer.done(); ++j) scorer.add(prompts[start + j], completions[j]);
  }
  return scorer.finish(setting);
}

RadioactivityReport detect_open_reading(const MarkovLM& suspect, std::span<const TokenSequence> probe_texts,
                                        const WatermarkConfig& cfg, const FilterSet* filter,
                                        const RadioactivityOptions& opts, RadioactivitySetting setting) {
  setting.model_access = ModelAccess::kOpen;
  setting.validate();
  cfg.validate(suspect.vocab_size());
  if (filter && filter->k() != cfg.window_k) throw std::invalid_argument("filter k differs from window k");
  const std::size_t k = cfg.window_k;
  ScoreAccumulator scorer(cfg, suspect.vocab_size());
  DedupTape tape(DedupTape::Scope::kGlobal);
  std::vector<double> token_scores;
  std::size_t documents = 0;
  for (const auto& text : probe_texts) {
    if (budget_reached(opts, token_scores.size())) break;
    ++documents;
    FilterSet seen_windows(k);
    const ScoringRules rules{opts.dedup ? &tape : nullptr, filter, nullptr};
    for (std::size_t t = k; t < text.size(); ++t) {
      const TokenView window = TokenView(text).subspan(t - k, k);
      if (opts.dedup) {
        if (seen_windows.contains(window)) continue;
        seen_windows.add(window);
      }
      const TokenId predicted = suspect.greedy_next(TokenView(text).first(t));
      if (!rules.admit(window, predicted)) continue;
      token_scores.push_back(scorer.token_score(window, predicted));
      if (budget_reached(opts, token_scores.size())) break;
    }
  }
  RadioactivityReport r = finish(cfg, suspect.vocab_size(), setting, token_scores, opts.num_chunks);
  r.documents = documents;
  return r;
}

double mean_nll(const MarkovLM& lm, TokenView doc) {
  if (doc.empty()) throw std::invalid_argument("cannot score an empty document");
  double nll = 0.0;
  for (std::size_t t = 0; t < doc.size(); ++t) nll -= std::log(lm.prob(doc.first(t), doc[t]));
  return nll / static_cast<double>(doc.size());
}

specfn::KsResult mia_ks_baseline(const MarkovLM& suspect, std::span<const TokenSequence> held_in,
                                 std::span<const TokenSequence> held_out, const MiaCalibration& calibration) {
  if (held_in.empty() || held_out.empty()) throw std::invalid_argument("MIA needs two nonempty corpora");
  const auto losses = [&](std::span<const TokenSequence> docs) {
    std::vector<double> out(docs.size());
    parallel_for(docs.size(), [&](std::size_t i) {
      double loss = mean_nll(suspect, docs[i]);
      if (calibration) loss /= calibration(docs[i]);
      out[i] = loss;
    });
    return out;
  };
  return specfn::ks_two_sample(losses(held_in), losses(held_out));
}

specfn::Probability combine_languages(std::span<const RadioactivityReport> reports) {
  if (reports.empty()) throw std::invalid_argument("need at least one report");
  std::vector<double> ps;
  ps.reserve(reports.size());
  for (const auto& r : reports) ps.push_back(r.pvalue);
  return specfn::fisher_combine(ps);
}

std::vector<TokenSequence> mix_training_data(std::span<const TokenSequence> watermarked,
                                             std::span<const TokenSequence> clean, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho outside [0, 1]");
  const std::size_t total = watermarked.size();
  const auto n_wm = static_cast<std::size_t>(std::llround(rho * static_cast<double>(total)));
  if (total - n_wm > clean.size()) throw std::invalid_argument("not enough clean documents to mix");
  std::vector<TokenSequence> out(watermarked.begin(), watermarked.begin() + static_cast<std::ptrdiff_t>(n_wm));
  out.insert(out.end(), clean.begin(), clean.begin() + static_cast<std::ptrdiff_t>(total - n_wm));
  return out;
}

}  // namespace wmtext
