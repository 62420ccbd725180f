#include "cli/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace wmtext::cli {

namespace {

TokenSequence parse_ids(std::string_view line, const std::string& where) {
  TokenSequence ids;
  for (auto field : split_whitespace(line)) {
    TokenId v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
      throw std::invalid_argument(where + ": not a token id: " + std::string(field));
    }
    ids.push_back(v);
  }
  return ids;
}

}  // namespace

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("error reading " + path);
  return lines;
}

std::vector<TokenSequence> read_documents(const std::string& path, const Vocabulary* vocab,
                                          InputFormat format) {
  std::vector<TokenSequence> docs;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    if (!line.empty() && line.front() == '{') {
      const auto rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded()) throw std::invalid_argument(where + ": malformed JSON");
      const char* field = rec.contains("completion_ids") ? "completion_ids" : "tokens";
      if (!rec.contains(field)) throw std::invalid_argument(where + ": no completion_ids/tokens field");
      docs.push_back(rec.at(field).get<TokenSequence>());
    } else if (format == InputFormat::kIds) {
      docs.push_back(parse_ids(line, where));
    } else {
      if (!vocab) throw std::invalid_argument("text input needs a vocabulary (pass --model or --ids)");
      docs.push_back(vocab->encode(line));
    }
    if (vocab) {
      for (TokenId t : docs.back()) {
        if (t >= vocab->size()) throw std::invalid_argument(where + ": token id outside vocabulary");
      }
    }
  }
  return docs;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("error writing " + path);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

nlohmann::ordered_json report_json(const DetectionReport& r) {
  nlohmann::ordered_json j;
  j["scheme"] = scheme_name(r.scheme);
  j["tokens_scored"] = r.tokens_scored;
  j["score"] = r.score;
  j["pvalue"] = r.pvalue;
  j["log10_pvalue"] = r.log10_pvalue;
  j["z_pvalue"] = r.z_pvalue;
  j["empty"] = r.empty;
  j["decoded_message"] = r.decoded_message ? nlohmann::ordered_json(*r.decoded_message) : nullptr;
  j["per_message_pvalues"] = r.per_message_pvalues.empty()
                                 ? nlohmann::ordered_json(nullptr)
                                 : nlohmann::ordered_json(r.per_message_pvalues);
  return j;
}

nlohmann::ordered_json report_json(const RadioactivityReport& r) {
  nlohmann::ordered_json j;
  j["setting"] = {{"model_access", r.setting.model_access == ModelAccess::kOpen ? "open" : "closed"},
                  {"supervision", r.setting.supervision},
                  {"rho", r.setting.rho}};
  j["documents"] = r.documents;
  j["tokens_generated"] = r.tokens_generated;
  j["tokens_scored"] = r.tokens_scored;
  j["score"] = r.score;
  j["pvalue"] = r.pvalue;
  j["log10_pvalue"] = r.log10_pvalue;
  j["per_chunk_pvalues"] = r.per_chunk_pvalues;
  return j;
}

void write_filter(const std::string& path, const FilterSet& filter) {
  std::string out;
  for (const auto& w : filter.windows()) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i) out.push_back(' ');
      out += std::to_string(w[i]);
    }
    out.push_back('\n');
  }
  write_text(path, out);
}

FilterSet read_filter(const std::string& path, std::size_t k) {
  FilterSet f(k);
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    f.add(parse_ids(line, path + ":" + std::to_string(lineno)));
  }
  return f;
}

}  // namespace wmtext::cli
