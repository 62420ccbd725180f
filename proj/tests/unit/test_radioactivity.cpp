#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wmtext/radioactivity.hpp"
#include "wmtext/synthetic.hpp"

using namespace wmtext;

namespace {

struct World {
  SyntheticSource src;
  MarkovLM alice;
  WatermarkConfig wm;
  std::vector<TokenSequence> prompts;
  std::vector<TokenSequence> watermarked;

  World() : alice(MarkovLM::train(src.vocab(), src.corpus(400, 256, 21), 2, 0.01)) {
    wm.scheme = Scheme::kGreenlist;
    wm.key = SecretKey(2024);
    wm.delta = 4.0;
    for (const auto& p : src.corpus(300, 4, 22)) prompts.push_back(p);
    GreenlistCache cache;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      auto out = generate(alice, prompts[i], 100, wm, 0, SamplerConfig::multinomial(i), &cache);
      TokenSequence doc = prompts[i];
      doc.insert(doc.end(), out.begin(), out.end());
      watermarked.push_back(std::move(doc));
    }
  }
};

const World& world() {
  static const World w;
  return w;
}

}  // namespace

TEST_CASE("settings are validated") {
  CHECK_THROWS(RadioactivitySetting{ModelAccess::kOpen, 1.5, 1.0}.validate());
  CHECK_THROWS(RadioactivitySetting{ModelAccess::kOpen, 1.0, -0.1}.validate());
  CHECK_NOTHROW(RadioactivitySetting{}.validate());
}

TEST_CASE("filter construction") {
  const FilterSet f = build_filter(std::vector<TokenSequence>{{1, 2, 3}}, 2);
  CHECK(f.size() == 2);
  CHECK(f.contains(TokenSequence{1, 2}));
  CHECK(f.contains(TokenSequence{2, 3}));
  CHECK_THROWS(build_filter(std::vector<TokenSequence>{}, 0));

  const FilterSet empty = build_filter(std::vector<TokenSequence>{}, 2);
  CHECK(empty.empty());
  const auto& w = world();
  const auto r = detect_closed(w.alice, std::vector<TokenSequence>(w.prompts.begin(), w.prompts.begin() + 5), w.wm,
                               &empty, 20, SamplerConfig::multinomial(1));
  CHECK(r.tokens_scored == 0);
  CHECK(r.pvalue == 1.0);
}

TEST_CASE("closed-model detection") {
  const auto& w = world();
  SUBCASE("a suspect trained only on watermarked text") {
    const MarkovLM bob = MarkovLM::train(w.src.vocab(), w.watermarked, 2, 0.01);
    const FilterSet filter = build_filter(w.watermarked, w.wm.window_k);
    RadioactivityOptions opts;
    opts.token_budget = 5000;
    const auto r = detect_closed(bob, w.prompts, w.wm, &filter, 100, SamplerConfig::multinomial(9), opts);
    CHECK(r.tokens_scored <= 5000);
    CHECK(r.tokens_scored > 1000);
    CHECK(r.log10_pvalue < -10);
    CHECK(r.per_chunk_pvalues.size() == 10);
  }

  SUBCASE("a suspect never exposed to the watermark") {
    const MarkovLM clean = MarkovLM::train(w.src.vocab(), w.src.corpus(400, 256, 99), 2, 0.01);
    double sum = 0.0;
    const int runs = 20;
    for (int i = 0; i < runs; ++i) {
      WatermarkConfig c = w.wm;
      c.key = SecretKey(1000 + i);
      RadioactivityOptions opts;
      opts.token_budget = 2000;
      sum += detect_closed(clean, w.prompts, c, nullptr, 50, SamplerConfig::multinomial(i), opts).pvalue;
    }
    CHECK(sum / runs > 0.25);
    CHECK(sum / runs < 0.75);
  }

  SUBCASE("sampling then scoring matches the one-shot call") {
    const MarkovLM bob = MarkovLM::train(w.src.vocab(), w.watermarked, 2, 0.01);
    RadioactivityOptions opts;
    opts.token_budget = 1500;
    const auto sampler = SamplerConfig::multinomial(17);
    const auto direct = detect_closed(bob, w.prompts, w.wm, nullptr, 30, sampler, opts);
    const auto completions = sample_completions(bob, w.prompts, 30, sampler);
    const auto split = score_closed(w.prompts, completions, w.wm, bob.vocab_size(), nullptr, opts);
    CHECK(direct.tokens_scored == 1500);
    CHECK(split.tokens_scored == direct.tokens_scored);
    CHECK(split.score == direct.score);
    CHECK(split.documents == direct.documents);
  }

  SUBCASE("prompt k-grams are excluded") {
    const MarkovLM bob = MarkovLM::train(w.src.vocab(), w.watermarked, 2, 0.01);
    const std::vector<TokenSequence> one{TokenSequence{5, 6, 5, 6, 5, 6}};
    const auto r = detect_closed(bob, one, w.wm, nullptr, 3, SamplerConfig::greedy());
    CHECK(r.tokens_generated == 3);
    CHECK(r.tokens_scored <= 3);
  }
}

TEST_CASE("open-model reading mode") {
  const auto& w = world();
  SUBCASE("a repeated window is scored once per text") {
    const TokenSequence probe{1, 2, 3, 1, 2, 3};
    const auto r = detect_open_reading(w.alice, std::vector<TokenSequence>{probe}, w.wm);
    CHECK(r.tokens_scored == 3);  // (1 2), (2 3), (3 1); the second (1 2) is skipped
  }

  SUBCASE("memorizing suspect beats closed access on the same budget") {
    const MarkovLM base = MarkovLM::train(w.src.vocab(), w.src.corpus(100, 256, 98), 2, 0.01);
    const MarkovLM bob = base.fine_tune(w.watermarked, 50.0);
    RadioactivityOptions opts;
    opts.token_budget = 3000;
    const FilterSet filter = build_filter(w.watermarked, 2);
    const auto open = detect_open_reading(bob, w.watermarked, w.wm, &filter, opts);
    const auto closed = detect_closed(bob, w.prompts, w.wm, &filter, 100, SamplerConfig::multinomial(4), opts);
    CHECK(open.log10_pvalue < -20);
    CHECK(open.log10_pvalue < closed.log10_pvalue);
    CHECK(open.setting.model_access == ModelAccess::kOpen);
  }

  SUBCASE("a uniform suspect") {
    const MarkovLM flat = MarkovLM::train(w.src.vocab(), w.src.corpus(10, 10, 1), 0, 1e12);
    const auto r = detect_open_reading(flat, w.watermarked, w.wm);
    CHECK(r.pvalue > 1e-3);
  }
}

TEST_CASE("membership inference baseline") {
  const auto& w = world();
  const auto held_in = w.src.corpus(60, 64, 501);
  const auto held_out = w.src.corpus(60, 64, 502);
  const auto same = mia_ks_baseline(w.alice, held_in, held_in);
  CHECK(same.statistic == 0.0);
  CHECK(same.pvalue == 1.0);
  const MarkovLM bob = w.alice.fine_tune(held_in, 100.0);
  CHECK(mia_ks_baseline(bob, held_in, held_out).pvalue < 1e-3);
  CHECK(mean_nll(w.alice, held_in[0]) > 0.0);
  const auto calibrated = mia_ks_baseline(bob, held_in, held_out, [](TokenView d) { return double(d.size()); });
  CHECK(calibrated.statistic == doctest::Approx(mia_ks_baseline(bob, held_in, held_out).statistic));
}

TEST_CASE("combining languages") {
  RadioactivityReport a;
  a.pvalue = 0.02;
  CHECK(combine_languages(std::vector<RadioactivityReport>{a}).value() == doctest::Approx(0.02).epsilon(1e-12));
  RadioactivityReport one;
  CHECK(combine_languages(std::vector<RadioactivityReport>{one, one}).value() == doctest::Approx(1.0));
  CHECK_THROWS(combine_languages(std::vector<RadioactivityReport>{}));
}

TEST_CASE("training-data mixture") {
  const std::vector<TokenSequence> wm{{1}, {2}, {3}, {4}};
  const std::vector<TokenSequence> clean{{9}, {8}, {7}, {6}};
  CHECK(mix_training_data(wm, clean, 0.5) == std::vector<TokenSequence>{{1}, {2}, {9}, {8}});
  CHECK(mix_training_data(wm, clean, 0.0) == clean);
  CHECK(mix_training_data(wm, clean, 1.0) == wm);
  CHECK_THROWS(mix_training_data(wm, clean, 2.0));
}
