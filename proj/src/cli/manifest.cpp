#include "cli/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>

#include "cli/io.hpp"

namespace wmtext::cli {

std::string utc_timestamp() {
  std::time_t t = 0;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["tool_version"] = WMTEXT_VERSION;
  j["wall_clock"] = utc_timestamp();
  j["config"] = config;
  auto& in = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& path : inputs) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64_file(path)));
    in.push_back({{"path", path}, {"fnv1a64", hex}});
  }
  j["outputs"] = outputs;
  return j;
}

void RunManifest::write_for(const std::string& output_path) const {
  write_text(output_path + ".manifest.json", to_json().dump(2) + "\n");
}

}  // namespace wmtext::cli
