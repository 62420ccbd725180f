#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wmtext/cli.hpp"
#include "wmtext/model_io.hpp"

namespace fs = std::filesystem;
using namespace wmtext;

namespace {

struct Sandbox {
  fs::path dir;

  Sandbox() {
    dir = fs::temp_directory_path() / ("wmtext_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  }
  ~Sandbox() { fs::remove_all(dir); }

  static int& counter() {
    static int n = 0;
    return n;
  }

  [[nodiscard]] std::string path(const std::string& name) const { return (dir / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "wmtext");
    out.str("");
    err.str("");
    return cli::run(args, out, err);
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
  }

  [[nodiscard]] std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  [[nodiscard]] std::vector<nlohmann::json> records(const std::string& name) const {
    std::vector<nlohmann::json> out;
    std::istringstream in(read(name));
    std::string line;
    while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
    return out;
  }

  std::ostringstream out, err;
};

// Synthetic corpus and a model trained on it.
void prepare(Sandbox& s) {
  REQUIRE(s.run({"synth-corpus", "--docs", "300", "--length", "128", "--out", s.path("corpus.txt")}) == 0);
  REQUIRE(s.run({"train-lm", "--corpus", s.path("corpus.txt"), "--order", "2", "--alpha", "0.01", "--out",
                 s.path("model.wmlm")}) == 0);
  REQUIRE(s.run({"synth-corpus", "--docs", "30", "--length", "4", "--seed", "77", "--out", s.path("prompts.txt")}) ==
          0);
}

}  // namespace

TEST_CASE("train-lm on a tiny corpus") {
  Sandbox s;
  s.write("tiny.txt", "a b a b a b\n");
  REQUIRE(s.run({"train-lm", "--corpus", s.path("tiny.txt"), "--order", "1", "--alpha", "0", "--no-byte-fallback",
                 "--out", s.path("m.wmlm")}) == 0);
  const MarkovLM lm = load_model(s.path("m.wmlm"));
  const TokenId a = *lm.vocab().find("a"), b = *lm.vocab().find("b");
  CHECK(lm.prob(TokenSequence{a}, b) == 1.0);
  CHECK(lm.prob(TokenSequence{b}, a) == 1.0);
  CHECK(fs::exists(s.path("m.wmlm.manifest.json")));

  REQUIRE(s.run({"train-lm", "--corpus", s.path("tiny.txt"), "--order", "0", "--alpha", "0", "--no-byte-fallback",
                 "--out", s.path("u.wmlm")}) == 0);
  const MarkovLM uni = load_model(s.path("u.wmlm"));
  CHECK(uni.order() == 0);
  CHECK(uni.prob(TokenSequence{a}, a) == 0.5);
}

TEST_CASE("exit codes") {
  Sandbox s;
  CHECK(s.run({"train-lm", "--corpus", s.path("missing.txt"), "--out", s.path("m.wmlm")}) == 2);
  CHECK(s.run({"no-such-command"}) == 2);
  CHECK(s.run({}) == 2);
  CHECK(s.run({"--help"}) == 0);
  CHECK(s.run({"--version"}) == 0);

  s.write("tiny.txt", "a b c\n");
  CHECK(s.run({"train-lm", "--corpus", s.path("tiny.txt"), "--out", s.path("no/such/dir/m.wmlm")}) == 3);

  s.write("broken.wmlm", "WMLM\x01garbage");
  CHECK(s.run({"generate", "--model", s.path("broken.wmlm"), "--out", s.path("g.ndjson")}) == 4);
  CHECK_FALSE(s.err.str().empty());

  REQUIRE(s.run({"train-lm", "--corpus", s.path("tiny.txt"), "--out", s.path("m.wmlm")}) == 0);
  CHECK(s.run({"generate", "--model", s.path("m.wmlm"), "--M", "4", "--message", "4", "--out",
               s.path("g.ndjson")}) == 2);
  CHECK(s.run({"generate", "--model", s.path("m.wmlm"), "--key", "0", "--out", s.path("g.ndjson")}) == 2);
  CHECK(s.run({"generate", "--model", s.path("m.wmlm"), "--scheme", "purple", "--out", s.path("g.ndjson")}) == 2);
}

TEST_CASE("generate and detect end to end") {
  Sandbox s;
  prepare(s);
  const std::string model = s.path("model.wmlm");

  SUBCASE("matching key is detected, a different key is not") {
    REQUIRE(s.run({"generate", "--model", model, "--prompts", s.path("prompts.txt"), "--scheme", "greenlist",
                   "--delta", "4", "--key", "11", "--length", "150", "--seed", "3", "--out", s.path("g.ndjson")}) == 0);
    REQUIRE(s.run({"detect", "--model", model, "--texts", s.path("g.ndjson"), "--scheme", "greenlist", "--key", "11",
                   "--out", s.path("d.ndjson"), "--summary", s.path("summary.json")}) == 0);
    for (const auto& r : s.records("d.ndjson")) CHECK(r["log10_pvalue"].get<double>() < -6);
    const auto summary = nlohmann::json::parse(s.read("summary.json"));
    CHECK(summary["documents"] == 30);
    CHECK(summary["histogram"]["counts"][0] == 30);

    REQUIRE(s.run({"detect", "--model", model, "--texts", s.path("g.ndjson"), "--scheme", "greenlist", "--key", "12",
                   "--out", s.path("d2.ndjson"), "--summary", s.path("summary2.json")}) == 0);
    const auto other = nlohmann::json::parse(s.read("summary2.json"));
    CHECK(other["mean_log10_pvalue"].get<double>() > -1.5);
  }

  SUBCASE("--scheme none samples without a watermark") {
    REQUIRE(s.run({"generate", "--model", model, "--scheme", "none", "--n", "20", "--length", "100", "--out",
                   s.path("plain.ndjson")}) == 0);
    REQUIRE(s.run({"detect", "--model", model, "--texts", s.path("plain.ndjson"), "--out", s.path("d.ndjson")}) == 0);
    double sum = 0.0;
    for (const auto& r : s.records("d.ndjson")) sum += r["pvalue"].get<double>();
    CHECK(sum / 20 > 0.2);
  }

  SUBCASE("multi-bit message is recovered") {
    REQUIRE(s.run({"generate", "--model", model, "--prompts", s.path("prompts.txt"), "--M", "256", "--message", "42",
                   "--length", "128", "--out", s.path("mb.ndjson")}) == 0);
    REQUIRE(s.run({"detect", "--model", model, "--texts", s.path("mb.ndjson"), "--M", "256", "--multibit", "--out",
                   s.path("d.ndjson")}) == 0);
    for (const auto& r : s.records("d.ndjson")) CHECK(r["decoded_message"] == 42);
  }

  SUBCASE("token corruption replaces the expected share of tokens") {
    const std::vector<std::string> base{"generate", "--model", model, "--n", "40", "--length", "200", "--seed", "5"};
    auto clean = base, noisy = base;
    clean.insert(clean.end(), {"--out", s.path("clean.ndjson")});
    noisy.insert(noisy.end(), {"--corrupt-rate", "0.3", "--corrupt-seed", "8", "--out", s.path("noisy.ndjson")});
    REQUIRE(s.run(clean) == 0);
    REQUIRE(s.run(noisy) == 0);
    const auto a = s.records("clean.ndjson"), b = s.records("noisy.ndjson");
    std::size_t changed = 0, total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto x = a[i]["completion_ids"].get<TokenSequence>(), y = b[i]["completion_ids"].get<TokenSequence>();
      for (std::size_t t = 0; t < x.size(); ++t) changed += x[t] != y[t];
      total += x.size();
    }
    const double vsize = static_cast<double>(load_model(model).vocab_size());
    const double expected = 0.3 * (1 - 1 / (vsize - 1));
    const double rate = static_cast<double>(changed) / static_cast<double>(total);
    CHECK(std::fabs(rate - expected) < 4 * std::sqrt(expected * (1 - expected) / static_cast<double>(total)));
  }
}

TEST_CASE("filters, radioactivity and calibration commands") {
  Sandbox s;
  prepare(s);
  const std::string model = s.path("model.wmlm");
  REQUIRE(s.run({"generate", "--model", model, "--prompts", s.path("prompts.txt"), "--scheme", "greenlist",
                 "--delta", "4", "--key", "5", "--length", "100", "--out", s.path("wm.ndjson")}) == 0);
  REQUIRE(s.run({"build-filter", "--corpus", s.path("wm.ndjson"), "--k", "2", "--out", s.path("filter.txt")}) == 0);
  CHECK(!s.read("filter.txt").empty());

  REQUIRE(s.run({"radioactivity", "closed", "--suspect", model, "--prompts", s.path("prompts.txt"), "--scheme",
                 "greenlist", "--key", "5", "--filter-path", s.path("filter.txt"), "--gen-length", "40", "--out",
                 s.path("closed.json")}) == 0);
  const auto closed = s.records("closed.json").at(0);
  CHECK(closed["pvalue"].get<double>() > 0.0);
  CHECK(closed.contains("per_chunk_pvalues"));

  REQUIRE(s.run({"radioactivity", "open", "--suspect", model, "--probes", s.path("wm.ndjson"), "--scheme", "greenlist",
                 "--key", "5", "--out", s.path("open.json")}) == 0);
  CHECK(s.records("open.json").at(0)["tokens_scored"].get<int>() > 0);

  REQUIRE(s.run({"radioactivity", "mia", "--suspect", model, "--held-in", s.path("corpus.txt"), "--held-out",
                 s.path("corpus.txt"), "--out", s.path("mia.json")}) == 0);
  CHECK(s.records("mia.json").at(0)["pvalue"].get<double>() == doctest::Approx(1.0));
  CHECK(s.run({"radioactivity", "--suspect", model}) == 2);

  REQUIRE(s.run({"calibrate", "--model", model, "--corpus", s.path("corpus.txt"), "--levels", "0.5,0.01", "--keys", "3",
                 "--out", s.path("cal.csv")}) == 0);
  const std::string csv = s.read("cal.csv");
  CHECK(csv.rfind("level,empirical_dedup,empirical_raw,trials\n", 0) == 0);
  CHECK(csv.find(",900\n") != std::string::npos);
  CHECK(s.run({"calibrate", "--model", model, "--corpus", s.path("corpus.txt"), "--levels", "2", "--out",
               s.path("bad.csv")}) == 2);
}

TEST_CASE("every command is deterministic") {
  Sandbox s;
  prepare(s);
  const std::string model = s.path("model.wmlm");
  const std::vector<std::vector<std::string>> commands{
      {"synth-corpus", "--docs", "20", "--length", "50", "--out", "@"},
      {"train-lm", "--corpus", s.path("corpus.txt"), "--out", "@"},
      {"generate", "--model", model, "--prompts", s.path("prompts.txt"), "--length", "30", "--out", "@"},
      {"detect", "--model", model, "--texts", s.path("corpus.txt"), "--out", "@"},
      {"build-filter", "--model", model, "--corpus", s.path("corpus.txt"), "--out", "@"},
      {"radioactivity", "closed", "--suspect", model, "--prompts", s.path("prompts.txt"), "--gen-length", "20", "--out",
       "@"},
      {"radioactivity", "open", "--suspect", model, "--probes", s.path("corpus.txt"), "--out", "@"},
      {"radioactivity", "mia", "--suspect", model, "--held-in", s.path("corpus.txt"), "--held-out",
       s.path("prompts.txt"), "--out", "@"},
      {"calibrate", "--model", model, "--corpus", s.path("prompts.txt"), "--out", "@"},
  };
  int n = 0;
  for (const auto& cmd : commands) {
    std::string outputs[2];
    std::string manifests[2];
    for (int rep = 0; rep < 2; ++rep) {
      const std::string name = "det" + std::to_string(n) + "_" + std::to_string(rep);
      auto args = cmd;
      std::replace(args.begin(), args.end(), std::string("@"), s.path(name));
      REQUIRE(s.run(args) == 0);
      outputs[rep] = s.read(name);
      manifests[rep] = s.read(name + ".manifest.json");
    }
    INFO(cmd[0]);
    CHECK(outputs[0] == outputs[1]);
    CHECK(!outputs[0].empty());
    // manifests differ only in the output path
    const auto m0 = nlohmann::json::parse(manifests[0]), m1 = nlohmann::json::parse(manifests[1]);
    CHECK(m0["config"] == m1["config"]);
    CHECK(m0["inputs"] == m1["inputs"]);
    CHECK(m0["wall_clock"] == m1["wall_clock"]);
    ++n;
  }
}
