#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wmtext/detector.hpp"
#include "wmtext/radioactivity.hpp"
#include "wmtext/vocab.hpp"

#include <json.hpp>

namespace wmtext::cli {

/// Thrown for unreadable/unwritable files; maps to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class InputFormat { kText, kIds };

std::vector<std::string> read_lines(const std::string& path);

/// One document per line. Lines starting with '{' are NDJSON records whose
/// "completion_ids" (or "tokens") array is used verbatim; other lines are
/// whitespace-separated ids (kIds) or text encoded with `vocab` (kText).
std::vector<TokenSequence> read_documents(const std::string& path, const Vocabulary* vocab,
                                          InputFormat format);

void write_text(const std::string& path, const std::string& content);

/// FNV-1a, 64-bit, over the file bytes.
std::uint64_t fnv1a64_file(const std::string& path);
std::uint64_t fnv1a64(std::string_view bytes);

nlohmann::ordered_json report_json(const DetectionReport& r);
nlohmann::ordered_json report_json(const RadioactivityReport& r);

/// One line per window: space-separated ids.
void write_filter(const std::string& path, const FilterSet& filter);
FilterSet read_filter(const std::string& path, std::size_t k);

}  // namespace wmtext::cli
