#include "wmtext/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cli/io.hpp"
#include "cli/manifest.hpp"
#include "wmtext/detector.hpp"
#include "wmtext/model_io.hpp"
#include "wmtext/parallel.hpp"
#include "wmtext/radioactivity.hpp"
#include "wmtext/schemes.hpp"
#include "wmtext/synthetic.hpp"

namespace wmtext::cli {

namespace {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Shared flag groups

struct WatermarkFlags {
  std::string scheme = "gumbel";
  std::uint64_t key = kDefaultKey;
  std::size_t k = 2;
  double gamma = 0.25;
  double delta = 2.0;
  double theta = 1.0;
  std::size_t d = 0;
  std::size_t messages = 1;

  void add_to(CLI::App& app, bool allow_none) {
    app.add_option("--scheme", scheme, allow_none ? "none | greenlist | gumbel" : "greenlist | gumbel")
        ->check(allow_none ? CLI::IsMember({"none", "greenlist", "gumbel"})
                           : CLI::IsMember({"greenlist", "gumbel"}))
        ->capture_default_str();
    app.add_option("--key", key, "secret key (nonzero)")->capture_default_str();
    app.add_option("--k", k, "watermark window length")->capture_default_str();
    app.add_option("--gamma", gamma, "greenlist fraction")->capture_default_str();
    app.add_option("--delta", delta, "greenlist logit bias")->capture_default_str();
    app.add_option("--theta", theta, "softmax temperature")->capture_default_str();
    app.add_option("--d", d, "secret-vector dimension (0: max(M, |V|))")->capture_default_str();
    app.add_option("--M", messages, "number of messages")->capture_default_str();
  }

  [[nodiscard]] std::optional<WatermarkConfig> config(std::size_t vocab_size) const {
    if (scheme == "none") return std::nullopt;
    WatermarkConfig c;
    c.scheme = parse_scheme(scheme);
    c.key = SecretKey(key);
    c.window_k = k;
    c.gamma = gamma;
    c.delta = delta;
    c.theta = theta;
    c.dim = d;
    c.num_messages = messages;
    c.validate(vocab_size);
    return c;
  }

  [[nodiscard]] ojson to_json() const {
    return {{"scheme", scheme}, {"key", key},     {"k", k}, {"gamma", gamma},
            {"delta", delta},   {"theta", theta}, {"d", d}, {"M", messages}};
  }
};

struct SamplerFlags {
  std::string mode = "multinomial";
  double top_p = 0.95;
  std::size_t top_k = 50;
  std::uint64_t seed = 0;
  double temperature = 1.0;

  void add_to(CLI::App& app) {
    app.add_option("--sampler", mode, "greedy | multinomial | top-p | top-k")
        ->check(CLI::IsMember({"greedy", "multinomial", "top-p", "top-k"}))
        ->capture_default_str();
    app.add_option("--top-p", top_p)->capture_default_str();
    app.add_option("--top-k", top_k)->capture_default_str();
    app.add_option("--seed", seed, "sampling seed")->capture_default_str();
    app.add_option("--temperature", temperature, "temperature without a watermark")->capture_default_str();
  }

  [[nodiscard]] SamplerConfig config() const {
    SamplerConfig s;
    if (mode == "greedy") s.mode = SamplerConfig::Mode::kGreedy;
    if (mode == "multinomial") s.mode = SamplerConfig::Mode::kMultinomial;
    if (mode == "top-p") s.mode = SamplerConfig::Mode::kTopP;
    if (mode == "top-k") s.mode = SamplerConfig::Mode::kTopK;
    s.top_p = top_p;
    s.top_k = top_k;
    s.rng_seed = seed;
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    s.temperature = temperature;
    s.validate();
    return s;
  }

  [[nodiscard]] ojson to_json() const {
    return {{"sampler", mode}, {"top_p", top_p}, {"top_k", top_k}, {"seed", seed}, {"temperature", temperature}};
  }
};

// Vocabulary source for commands that read token streams.
struct VocabFlags {
  std::string model_path;
  std::size_t vocab_size = 0;
  bool ids = false;

  void add_to(CLI::App& app) {
    app.add_option("--model", model_path, "model whose vocabulary tokenizes the input")
        ->check(CLI::ExistingFile);
    app.add_option("--vocab-size", vocab_size, "vocabulary size for id input without a model");
    app.add_flag("--ids", ids, "input lines are whitespace-separated token ids");
  }

  // Returns the vocabulary (possibly synthetic) and its size.
  [[nodiscard]] std::shared_ptr<const Vocabulary> load() const {
    if (!model_path.empty()) return load_model(model_path).vocab_ptr();
    if (vocab_size >= 2) return std::make_shared<const Vocabulary>(Vocabulary::synthetic(vocab_size - 1));
    throw std::invalid_argument("pass --model or --vocab-size to fix the vocabulary");
  }

  [[nodiscard]] InputFormat format() const { return ids ? InputFormat::kIds : InputFormat::kText; }
};

std::string ndjson(const std::vector<ojson>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump(-1, ' ', false, ojson::error_handler_t::replace);
    out.push_back('\n');
  }
  return out;
}

std::vector<double> parse_levels(const std::string& csv) {
  std::vector<double> levels;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const double v = std::stod(item);
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument("levels must lie in (0, 1]");
    levels.push_back(v);
  }
  if (levels.empty()) throw std::invalid_argument("no levels given");
  return levels;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Commands

struct Command {
  CLI::App* app = nullptr;
  std::function<void()> action;
};

Command add_synth_corpus(CLI::App& root, std::ostream& out) {
  auto* app = root.add_subcommand("synth-corpus", "write a corpus from the seeded synthetic source");
  auto opts = std::make_shared<std::tuple<SyntheticSourceConfig, std::size_t, std::size_t, std::uint64_t,
                                          std::size_t, bool, std::string>>();
  auto& [src, docs, length, seed, phrase, ids, out_path] = *opts;
  docs = 100;
  length = 256;
  seed = 1;
  phrase = 0;
  app->add_option("--docs", docs)->capture_default_str();
  app->add_option("--length", length)->capture_default_str();
  app->add_option("--seed", seed, "document sampling seed")->capture_default_str();
  app->add_option("--vocab-words", src.vocab_words)->capture_default_str();
  app->add_option("--branching", src.branching)->capture_default_str();
  app->add_option("--zipf", src.zipf_exponent)->capture_default_str();
  app->add_option("--source-seed", src.seed, "seed of the source's transition table")->capture_default_str();
  app->add_option("--repeat-phrase", phrase, "repeat one phrase of this length per document (0: off)")
      ->capture_default_str();
  app->add_flag("--ids", ids, "write token ids instead of words");
  app->add_option("--out", out_path)->required();
  return {app, [opts, &out] {
            auto& [src, docs, length, seed, phrase, ids, out_path] = *opts;
            const SyntheticSource source(src);
            const auto corpus = phrase ? source.repetitive_corpus(docs, length, phrase, seed)
                                       : source.corpus(docs, length, seed);
            std::string text;
            for (const auto& doc : corpus) {
              if (ids) {
                for (std::size_t i = 0; i < doc.size(); ++i) {
                  if (i) text.push_back(' ');
                  text += std::to_string(doc[i]);
                }
              } else {
                text += source.vocab()->decode(doc);
              }
              text.push_back('\n');
            }
            write_text(out_path, text);
            RunManifest m{"synth-corpus",
                          {{"docs", docs}, {"length", length}, {"seed", seed}, {"vocab_words", src.vocab_words},
                           {"branching", src.branching}, {"zipf", src.zipf_exponent}, {"source_seed", src.seed},
                           {"repeat_phrase", phrase}, {"ids", ids}},
                          {},
                          {out_path}};
            m.write_for(out_path);
            out << "wrote " << corpus.size() << " documents to " << out_path << "\n";
          }};
}

Command add_train_lm(CLI::App& root, std::ostream& out) {
  struct Opts {
    std::string corpus, out_path;
    std::size_t order = 2;
    double alpha = 0.01;
    std::size_t min_freq = 1;
    bool ids = false;
    bool no_byte_fallback = false;
    std::size_t vocab_size = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("train-lm", "train an order-n Markov model");
  app->add_option("--corpus", o->corpus, "one document per line")->required()->check(CLI::ExistingFile);
  app->add_option("--order", o->order)->capture_default_str();
  app->add_option("--alpha", o->alpha, "additive smoothing")->capture_default_str();
  app->add_option("--min-freq", o->min_freq, "vocabulary frequency floor")->capture_default_str();
  app->add_flag("--ids", o->ids, "corpus lines are token ids");
  app->add_option("--vocab-size", o->vocab_size, "vocabulary size for --ids (default: max id + 1)");
  app->add_flag("--no-byte-fallback", o->no_byte_fallback);
  app->add_option("--out", o->out_path)->required();
  return {app, [o, &out] {
            std::shared_ptr<const Vocabulary> vocab;
            std::vector<TokenSequence> docs;
            if (o->ids) {
              docs = read_documents(o->corpus, nullptr, InputFormat::kIds);
              std::size_t v = o->vocab_size;
              for (const auto& d : docs) {
                for (TokenId t : d) v = std::max<std::size_t>(v, std::size_t{t} + 1);
              }
              vocab = std::make_shared<const Vocabulary>(Vocabulary::synthetic(std::max<std::size_t>(v, 2) - 1));
            } else {
              const auto lines = read_lines(o->corpus);
              vocab = std::make_shared<const Vocabulary>(
                  Vocabulary::build(lines, o->min_freq, !o->no_byte_fallback));
              for (const auto& l : lines) docs.push_back(vocab->encode(l));
            }
            const MarkovLM lm = MarkovLM::train(vocab, docs, o->order, o->alpha);
            save_model(o->out_path, lm);
            RunManifest m{"train-lm",
                          {{"order", o->order}, {"alpha", o->alpha}, {"min_freq", o->min_freq}, {"ids", o->ids},
                           {"byte_fallback", !o->no_byte_fallback}},
                          {o->corpus},
                          {o->out_path}};
            m.write_for(o->out_path);
            out << "trained order-" << lm.order() << " model: |V|=" << lm.vocab_size()
                << ", contexts=" << lm.num_contexts() << "\n";
          }};
}

Command add_generate(CLI::App& root, std::ostream& out) {
  struct Opts {
    std::string model, prompts, out_path;
    WatermarkFlags wm;
    SamplerFlags sampler;
    std::size_t message = 0;
    std::size_t n = 1;
    std::size_t length = 64;
    double corrupt_rate = 0.0;
    std::uint64_t corrupt_seed = 0;
    bool ids = false;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("generate", "generate (optionally watermarked) completions");
  app->add_option("--model", o->model)->required()->check(CLI::ExistingFile);
  app->add_option("--prompts", o->prompts, "one prompt per line (default: a single empty prompt)")
      ->check(CLI::ExistingFile);
  app->add_flag("--ids", o->ids, "prompt lines are token ids");
  o->wm.add_to(*app, true);
  app->add_option("--message", o->message, "embedded message m < M")->capture_default_str();
  o->sampler.add_to(*app);
  app->add_option("--n", o->n, "completions per prompt")->capture_default_str();
  app->add_option("--length", o->length, "tokens per completion")->capture_default_str();
  app->add_option("--corrupt-rate", o->corrupt_rate, "replace each token by a uniform one with this probability")
      ->capture_default_str();
  app->add_option("--corrupt-seed", o->corrupt_seed)->capture_default_str();
  app->add_option("--out", o->out_path)->required();
  return {app, [o, &out] {
            if (!(o->corrupt_rate >= 0.0 && o->corrupt_rate <= 1.0)) {
              throw std::invalid_argument("--corrupt-rate must lie in [0, 1]");
            }
            if (o->wm.scheme != "none" && o->message >= o->wm.messages) {
              throw std::invalid_argument("--message must be < --M");
            }
            const MarkovLM lm = load_model(o->model);
            const auto wm = o->wm.config(lm.vocab_size());
            const SamplerConfig sampler = o->sampler.config();
            std::vector<TokenSequence> prompts{TokenSequence{}};
            if (!o->prompts.empty()) {
              prompts = read_documents(o->prompts, &lm.vocab(), o->ids ? InputFormat::kIds : InputFormat::kText);
            }
            const std::size_t total = prompts.size() * o->n;
            std::vector<TokenSequence> completions(total);
            GreenlistCache cache;
            parallel_for(total, [&](std::size_t i) {
              SamplerConfig s = sampler;
              s.rng_seed = SplitMix64::mix(sampler.rng_seed + i);
              TokenSequence c = generate(lm, prompts[i / o->n], o->length, wm, o->message, s, &cache);
              if (o->corrupt_rate > 0.0) {
                SplitMix64 rng(SplitMix64::mix(o->corrupt_seed ^ (0xC0FFEEULL + i)));
                for (TokenId& t : c) {
                  if (rng.next_unit() < o->corrupt_rate) {
                    t = static_cast<TokenId>(1 + rng.next() % (lm.vocab_size() - 1));
                  }
                }
              }
              completions[i] = std::move(c);
            });
            std::vector<ojson> records;
            records.reserve(total);
            for (std::size_t i = 0; i < total; ++i) {
              const auto& p = prompts[i / o->n];
              records.push_back({{"prompt", lm.vocab().decode(p)},
                                 {"prompt_ids", p},
                                 {"completion_ids", completions[i]},
                                 {"completion", lm.vocab().decode(completions[i])}});
            }
            write_text(o->out_path, ndjson(records));
            ojson cfg = o->wm.to_json();
            cfg["message"] = o->message;
            cfg["n"] = o->n;
            cfg["length"] = o->length;
            cfg["corrupt_rate"] = o->corrupt_rate;
            cfg["corrupt_seed"] = o->corrupt_seed;
            cfg.update(o->sampler.to_json());
            RunManifest m{"generate", cfg, {o->model}, {o->out_path}};
            if (!o->prompts.empty()) m.inputs.push_back(o->prompts);
            m.write_for(o->out_path);
            out << "wrote " << total << " completions to " << o->out_path << "\n";
          }};
}

ojson detection_summary(const std::vector<DetectionReport>& reports, const std::vector<double>& levels) {
  ojson s;
  s["documents"] = reports.size();
  double sum_log = 0.0;
  std::size_t nonempty = 0;
  std::vector<std::size_t> bins(10, 0);
  for (const auto& r : reports) {
    if (r.empty) continue;
    ++nonempty;
    sum_log += r.log10_pvalue;
    bins[std::min<std::size_t>(9, static_cast<std::size_t>(r.pvalue * 10.0))]++;
  }
  s["scored_documents"] = nonempty;
  s["mean_log10_pvalue"] = nonempty ? sum_log / static_cast<double>(nonempty) : 0.0;
  auto& table = s["fpr_table"] = ojson::array();
  for (double level : levels) {
    const auto hits = std::count_if(reports.begin(), reports.end(),
                                    [&](const DetectionReport& r) { return !r.empty && r.pvalue <= level; });
    table.push_back({{"level", level},
                     {"empirical", nonempty ? static_cast<double>(hits) / static_cast<double>(nonempty) : 0.0}});
  }
  s["histogram"] = {{"edges", {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}}, {"counts", bins}};
  return s;
}

Command add_detect(CLI::App& root, std::ostream& out) {
  struct Opts {
    std::string texts, out_path, filter_path, summary_path;
    std::string tape_scope = "per-document";
    std::string score_fn = "standard";
    std::string levels = "0.1,0.01,0.001,0.0001";
    WatermarkFlags wm;
    VocabFlags vocab;
    bool multibit = false;
    bool no_dedup = false;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("detect", "score documents and report p-values");
  app->add_option("--texts", o->texts, "documents: text, ids (--ids) or NDJSON from generate")
      ->required()
      ->check(CLI::ExistingFile);
  o->vocab.add_to(*app);
  o->wm.add_to(*app, false);
  app->add_flag("--multibit", o->multibit, "decode one of M messages");
  app->add_option("--filter-path", o->filter_path, "only score windows listed in this file")->check(CLI::ExistingFile);
  app->add_option("--tape-scope", o->tape_scope, "per-document | global")
      ->check(CLI::IsMember({"per-document", "global"}))
      ->capture_default_str();
  app->add_flag("--no-dedup", o->no_dedup, "score repeated (window, token) tuples");
  app->add_option("--score-fn", o->score_fn, "standard | simplified")
      ->check(CLI::IsMember({"standard", "simplified"}))
      ->capture_default_str();
  app->add_option("--summary", o->summary_path, "write an aggregate JSON summary here");
  app->add_option("--levels", o->levels, "FPR levels for the summary")->capture_default_str();
  app->add_option("--out", o->out_path)->required();
  return {app, [o, &out] {
            const auto levels = parse_levels(o->levels);
            const auto vocab = o->vocab.load();
            const auto cfg = *o->wm.config(vocab->size());
            const auto docs = read_documents(o->texts, vocab.get(), o->vocab.format());
            std::optional<FilterSet> filter;
            if (!o->filter_path.empty()) filter = read_filter(o->filter_path, cfg.window_k);
            const ScoreFunction fn = o->score_fn == "simplified" ? ScoreFunction::kSimplified : ScoreFunction::kStandard;
            if (o->multibit && (fn != ScoreFunction::kStandard || filter)) {
              throw std::invalid_argument("--multibit supports neither --score-fn simplified nor --filter-path");
            }
            const bool global = o->tape_scope == "global";
            DedupTape global_tape(DedupTape::Scope::kGlobal);
            std::vector<DetectionReport> reports(docs.size());
            const auto score_one = [&](std::size_t i) {
              DedupTape local(DedupTape::Scope::kPerDocument);
              DedupTape* tape = o->no_dedup ? nullptr : (global ? &global_tape : &local);
              reports[i] = o->multibit ? score_text_multibit(docs[i], cfg, vocab->size(), tape)
                                       : score_text(docs[i], cfg, vocab->size(), tape,
                                                    filter ? &*filter : nullptr, std::nullopt, fn);
            };
            if (global && !o->no_dedup) {
              for (std::size_t i = 0; i < docs.size(); ++i) score_one(i);  // tape order follows input order
            } else {
              parallel_for(docs.size(), score_one);
            }
            std::vector<ojson> records;
            for (const auto& r : reports) records.push_back(report_json(r));
            write_text(o->out_path, ndjson(records));
            ojson cfg_json = o->wm.to_json();
            cfg_json.update({{"multibit", o->multibit}, {"tape_scope", o->tape_scope}, {"dedup", !o->no_dedup},
                             {"score_fn", o->score_fn}, {"filter_path", o->filter_path}});
            RunManifest m{"detect", cfg_json, {o->texts}, {o->out_path}};
            if (!o->vocab.model_path.empty()) m.inputs.push_back(o->vocab.model_path);
            if (!o->filter_path.empty()) m.inputs.push_back(o->filter_path);
            if (!o->summary_path.empty()) {
              write_text(o->summary_path, detection_summary(reports, levels).dump(2) + "\n");
              m.outputs.push_back(o->summary_path);
            }
            m.write_for(o->out_path);
            out << "scored " << docs.size() << " documents into " << o->out_path << "\n";
          }};
}

Command add_build_filter(CLI::App& root, std::ostream& out) {
  struct Opts {
    std::string corpus, out_path;
    std::size_t k = 2;
    VocabFlags vocab;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("build-filter", "collect the k-grams of a (watermarked) corpus");
  app->add_option("--corpus", o->corpus)->required()->check(CLI::ExistingFile);
  app->add_option("--k", o->k)->capture_default_str();
  o->vocab.add_to(*app);
  app->add_option("--out", o->out_path)->required();
  return {app, [o, &out] {
            std::shared_ptr<const Vocabulary> vocab;
            if (!o->vocab.model_path.empty() || o->vocab.vocab_size >= 2) vocab = o->vocab.load();
            const auto docs = read_documents(o->corpus, vocab.get(), o->vocab.format());
            const FilterSet f = build_filter(docs, o->k);
            write_filter(o->out_path, f);
            RunManifest{"build-filter", {{"k", o->k}}, {o->corpus}, {o->out_path}}.write_for(o->out_path);
            out << "wrote " << f.size() << " windows to " << o->out_path << "\n";
          }};
}

Command add_radioactivity(CLI::App& root, std::ostream& out) {
  struct Opts {
    std::string suspect, prompts, probes, held_in, held_out, filter_path, filter_corpus, out_path;
    WatermarkFlags wm;
    SamplerFlags sampler;
    RadioactivityOptions run;
    RadioactivitySetting setting;
    std::size_t gen_length = 64;
    bool ids = false;
    bool no_dedup = false;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("radioactivity", "test a suspect model for watermark radioactivity");
  app->require_subcommand(1);
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--suspect", o->suspect, "suspect model")->required()->check(CLI::ExistingFile);
    sub->add_flag("--ids", o->ids, "input lines are token ids");
    sub->add_option("--out", o->out_path)->required();
  };
  const auto detection = [&](CLI::App* sub) {
    o->wm.add_to(*sub, false);
    sub->add_option("--filter-path", o->filter_path, "windows file (see build-filter)")->check(CLI::ExistingFile);
    sub->add_option("--filter-corpus", o->filter_corpus, "build the filter from this watermarked corpus")
        ->check(CLI::ExistingFile);
    sub->add_option("--budget", o->run.token_budget, "scored-token budget (0: all)")->capture_default_str();
    sub->add_option("--chunks", o->run.num_chunks, "per-chunk p-values")->capture_default_str();
    sub->add_option("--rho", o->setting.rho, "recorded in the report")->capture_default_str();
    sub->add_option("--supervision", o->setting.supervision, "degree of supervision d, recorded in the report")
        ->capture_default_str();
    sub->add_flag("--no-dedup", o->no_dedup, "disable the tape");
  };
  auto* closed = app->add_subcommand("closed", "sample from the suspect and score its outputs");
  common(closed);
  detection(closed);
  closed->add_option("--prompts", o->prompts)->required()->check(CLI::ExistingFile);
  closed->add_option("--gen-length", o->gen_length)->capture_default_str();
  o->sampler.add_to(*closed);
  auto* open = app->add_subcommand("open", "reading mode: score the suspect's predictions on probe texts");
  common(open);
  detection(open);
  open->add_option("--probes", o->probes)->required()->check(CLI::ExistingFile);
  auto* mia = app->add_subcommand("mia", "K-S membership-inference baseline");
  common(mia);
  mia->add_option("--held-in", o->held_in)->required()->check(CLI::ExistingFile);
  mia->add_option("--held-out", o->held_out)->required()->check(CLI::ExistingFile);

  return {app, [o, closed, open, &out] {
            const MarkovLM suspect = load_model(o->suspect);
            const InputFormat fmt = o->ids ? InputFormat::kIds : InputFormat::kText;
            const Vocabulary* vocab = &suspect.vocab();
            RunManifest m;
            m.inputs.push_back(o->suspect);
            m.outputs.push_back(o->out_path);
            ojson record;
            if (closed->parsed() || open->parsed()) {
              const auto cfg = *o->wm.config(suspect.vocab_size());
              o->run.dedup = !o->no_dedup;
              std::optional<FilterSet> filter;
              if (!o->filter_path.empty()) {
                filter = read_filter(o->filter_path, cfg.window_k);
                m.inputs.push_back(o->filter_path);
              } else if (!o->filter_corpus.empty()) {
                filter = build_filter(read_documents(o->filter_corpus, vocab, fmt), cfg.window_k);
                m.inputs.push_back(o->filter_corpus);
              }
              const FilterSet* fp = filter ? &*filter : nullptr;
              RadioactivityReport report;
              m.config = o->wm.to_json();
              if (closed->parsed()) {
                m.command = "radioactivity closed";
                o->setting.model_access = ModelAccess::kClosed;
                const auto prompts = read_documents(o->prompts, vocab, fmt);
                m.inputs.push_back(o->prompts);
                report = detect_closed(suspect, prompts, cfg, fp, o->gen_length, o->sampler.config(), o->run,
                                       o->setting);
                m.config.update(o->sampler.to_json());
                m.config["gen_length"] = o->gen_length;
              } else {
                m.command = "radioactivity open";
                const auto probes = read_documents(o->probes, vocab, fmt);
                m.inputs.push_back(o->probes);
                report = detect_open_reading(suspect, probes, cfg, fp, o->run, o->setting);
              }
              m.config.update({{"budget", o->run.token_budget}, {"chunks", o->run.num_chunks},
                               {"dedup", o->run.dedup}, {"rho", o->setting.rho},
                               {"supervision", o->setting.supervision}});
              record = report_json(report);
              record["config"] = m.config;
            } else {
              m.command = "radioactivity mia";
              const auto in = read_documents(o->held_in, vocab, fmt);
              const auto held_out = read_documents(o->held_out, vocab, fmt);
              m.inputs.push_back(o->held_in);
              m.inputs.push_back(o->held_out);
              const auto ks = mia_ks_baseline(suspect, in, held_out);
              record = {{"statistic", ks.statistic}, {"pvalue", ks.pvalue}, {"held_in", in.size()},
                        {"held_out", held_out.size()}};
            }
            write_text(o->out_path, record.dump() + "\n");
            m.write_for(o->out_path);
            out << m.command << ": " << record.value("pvalue", 1.0) << "\n";
          }};
}

Command add_calibrate(CLI::App& root, std::ostream& out) {
  struct Opts {
    std::string corpus, out_path;
    std::string levels = "0.1,0.01,0.001,0.0001";
    std::size_t keys = 10;
    WatermarkFlags wm;
    VocabFlags vocab;
  };
  auto o = std::make_shared<Opts>();
  auto* app = root.add_subcommand("calibrate", "empirical vs theoretical FPR on unwatermarked text");
  app->add_option("--corpus", o->corpus)->required()->check(CLI::ExistingFile);
  o->vocab.add_to(*app);
  o->wm.add_to(*app, false);
  app->add_option("--levels", o->levels, "comma-separated theoretical FPRs")->capture_default_str();
  app->add_option("--keys", o->keys, "keys per document, derived from --key")->capture_default_str();
  app->add_option("--out", o->out_path, "CSV output")->required();
  return {app, [o, &out] {
            const auto levels = parse_levels(o->levels);
            const auto vocab = o->vocab.load();
            const auto cfg = *o->wm.config(vocab->size());
            const auto docs = read_documents(o->corpus, vocab.get(), o->vocab.format());
            const auto res = calibrate_fpr(docs, cfg, vocab->size(), levels, o->keys);
            std::string csv = "level,empirical_dedup,empirical_raw,trials\n";
            for (const auto& row : res.rows) {
              csv += format_double(row.level) + "," + format_double(row.empirical_dedup) + "," +
                     format_double(row.empirical_raw) + "," + std::to_string(res.trials) + "\n";
            }
            write_text(o->out_path, csv);
            ojson cfg_json = o->wm.to_json();
            cfg_json.update({{"levels", levels}, {"keys", o->keys}});
            RunManifest m{"calibrate", cfg_json, {o->corpus}, {o->out_path}};
            if (!o->vocab.model_path.empty()) m.inputs.push_back(o->vocab.model_path);
            m.write_for(o->out_path);
            out << csv;
          }};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"wmtext: watermarking and radioactivity detection for generated text", "wmtext"};
  app.require_subcommand(1);
  app.set_version_flag("--version", WMTEXT_VERSION);
  std::vector<Command> commands{add_synth_corpus(app, out), add_train_lm(app, out), add_generate(app, out),
                                add_detect(app, out),       add_build_filter(app, out),
                                add_radioactivity(app, out), add_calibrate(app, out)};
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    for (const auto& c : commands) {
      if (c.app->parsed()) c.action();
    }
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace wmtext::cli
