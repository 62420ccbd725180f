#include "wmtext/vocab.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace wmtext {

namespace {

constexpr TokenId kFirstByteId = 1;
constexpr std::size_t kNumBytes = 256;

std::string byte_token(unsigned value) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "<0x%02X>", value);
  return buf;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> words, bool byte_fallback)
    : byte_fallback_(byte_fallback) {
  id_to_token_.reserve(1 + (byte_fallback ? kNumBytes : 0) + words.size());
  id_to_token_.emplace_back(kBos);
  if (byte_fallback) {
    for (unsigned b = 0; b < kNumBytes; ++b) id_to_token_.push_back(byte_token(b));
  }
  for (auto& w : words) id_to_token_.push_back(std::move(w));
  token_to_id_.reserve(id_to_token_.size());
  for (TokenId id = 0; id < id_to_token_.size(); ++id) {
    if (!token_to_id_.emplace(id_to_token_[id], id).second) {
      throw std::invalid_argument("duplicate vocabulary entry: " + id_to_token_[id]);
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<std::string>& documents, std::size_t min_freq,
                             bool byte_fallback) {
  std::map<std::string, std::size_t, std::less<>> freq;
  for (const auto& doc : documents) {
    for (auto w : split_whitespace(doc)) ++freq[std::string(w)];
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [w, n] : freq) {
    if (n < min_freq || w == kBos) continue;
    if (byte_fallback && w.size() == 6 && w.starts_with("<0x") && w.back() == '>') continue;
    entries.emplace_back(w, n);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  words.reserve(entries.size());
  for (auto& e : entries) words.push_back(std::move(e.first));
  return Vocabulary(std::move(words), byte_fallback);
}

Vocabulary Vocabulary::synthetic(std::size_t num_words) {
  std::vector<std::string> words;
  words.reserve(num_words);
  for (std::size_t i = 0; i < num_words; ++i) words.push_back("w" + std::to_string(i));
  return Vocabulary(std::move(words), false);
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  if (auto it = token_to_id_.find(std::string(token)); it != token_to_id_.end()) return it->second;
  return std::nullopt;
}

TokenSequence Vocabulary::encode(std::string_view text) const {
  TokenSequence out;
  for (auto w : split_whitespace(text)) {
    if (auto id = find(w); id && *id != kBosId) {
      out.push_back(*id);
    } else if (byte_fallback_) {
      for (unsigned char c : w) out.push_back(kFirstByteId + c);
    } else {
      throw std::invalid_argument("word outside vocabulary: " + std::string(w));
    }
  }
  return out;
}

std::string Vocabulary::decode(TokenView tokens) const {
  std::string out;
  bool in_bytes = false;
  for (TokenId t : tokens) {
    if (t >= size()) throw std::out_of_range("token id outside vocabulary");
    const bool is_byte = byte_fallback_ && t >= kFirstByteId && t < kFirstByteId + kNumBytes;
    if (is_byte) {
      if (!in_bytes && !out.empty()) out.push_back(' ');
      out.push_back(static_cast<char>(t - kFirstByteId));
      in_bytes = true;
      continue;
    }
    in_bytes = false;
    if (t == kBosId) continue;
    if (!out.empty()) out.push_back(' ');
    out += id_to_token_[t];
  }
  return out;
}

}  // namespace wmtext
