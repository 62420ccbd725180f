#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace wmtext::cli {

/// Provenance record written next to every output as <output>.manifest.json.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  /// Digests the inputs and stamps the tool version and wall-clock time
  /// (SOURCE_DATE_EPOCH, when set, replaces the clock).
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  void write_for(const std::string& output_path) const;
};

std::string utc_timestamp();

}  // namespace wmtext::cli
