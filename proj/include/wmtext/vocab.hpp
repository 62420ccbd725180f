#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wmtext/types.hpp"

namespace wmtext {

/// Bijective token table. Id 0 is always the begin-of-sequence marker "<s>".
/// With byte fallback, ids 1..256 are the byte units "<0x00>".."<0xFF>" and a
/// word outside the table is encoded as its UTF-8 bytes.
class Vocabulary {
 public:
  static constexpr std::string_view kBos = "<s>";

  Vocabulary() : Vocabulary(std::vector<std::string>{}, false) {}
  /// `words` excludes the reserved entries; duplicates are rejected.
  Vocabulary(std::vector<std::string> words, bool byte_fallback);

  /// Whitespace-split vocabulary, most frequent first (ties lexicographic),
  /// keeping words seen at least `min_freq` times.
  static Vocabulary build(const std::vector<std::string>& documents, std::size_t min_freq = 1,
                          bool byte_fallback = true);

  /// "<s>", "w0", ..., "w{n-1}" without byte fallback.
  static Vocabulary synthetic(std::size_t num_words);

  [[nodiscard]] std::size_t size() const { return id_to_token_.size(); }
  [[nodiscard]] bool byte_fallback() const { return byte_fallback_; }
  [[nodiscard]] const std::string& token(TokenId id) const { return id_to_token_.at(id); }
  [[nodiscard]] std::optional<TokenId> find(std::string_view token) const;
  [[nodiscard]] const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Throws std::invalid_argument for an unknown word when byte fallback is off.
  [[nodiscard]] TokenSequence encode(std::string_view text) const;
  [[nodiscard]] std::string decode(TokenView tokens) const;

  bool operator==(const Vocabulary& other) const {
    return byte_fallback_ == other.byte_fallback_ && id_to_token_ == other.id_to_token_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  bool byte_fallback_ = false;
};

std::vector<std::string_view> split_whitespace(std::string_view text);

}  // namespace wmtext
