#include "wmtext/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace wmtext {

namespace {

static_assert(std::endian::native == std::endian::little, "WMLM I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw InvariantError("truncated model file");
  }
  return value;
}

}  // namespace

void write_model(std::ostream& out, const MarkovLM& lm) {
  const Vocabulary& vocab = lm.vocab();
  out.write("WMLM", 4);
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(lm.order()));
  put<double>(out, lm.alpha());
  put<std::uint8_t>(out, vocab.byte_fallback() ? 1 : 0);
  const std::size_t first_word = 1 + (vocab.byte_fallback() ? 256 : 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(vocab.size() - first_word));
  for (std::size_t id = first_word; id < vocab.size(); ++id) {
    const std::string& w = vocab.token(static_cast<TokenId>(id));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  const auto rows = lm.table();
  put<std::uint64_t>(out, rows.size());
  for (const auto& row : rows) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(row.context.size()));
    for (TokenId t : row.context.tokens()) put<std::uint32_t>(out, t);
    put<std::uint32_t>(out, row.token);
    put<double>(out, row.count);
  }
  if (!out) throw std::ios_base::failure("failed writing model");
}

MarkovLM read_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "WMLM", 4) != 0) {
    throw InvariantError("not a WMLM model file");
  }
  if (const auto version = get<std::uint32_t>(in); version != kModelFormatVersion) {
    throw InvariantError("unsupported WMLM version " + std::to_string(version));
  }
  const auto order = get<std::uint32_t>(in);
  const auto alpha = get<double>(in);
  const bool byte_fallback = get<std::uint8_t>(in) != 0;
  const auto num_words = get<std::uint32_t>(in);
  std::vector<std::string> words;
  words.reserve(num_words);
  for (std::uint32_t i = 0; i < num_words; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string w(len, '\0');
    if (!in.read(w.data(), len)) throw InvariantError("truncated vocabulary");
    words.push_back(std::move(w));
  }
  auto vocab = std::make_shared<const Vocabulary>(std::move(words), byte_fallback);
  const auto num_rows = get<std::uint64_t>(in);
  std::vector<CountEntry> rows;
  rows.reserve(num_rows);
  TokenSequence ctx;
  for (std::uint64_t r = 0; r < num_rows; ++r) {
    const auto len = get<std::uint8_t>(in);
    if (len > Context::kMaxLength) throw InvariantError("context length exceeds maximum");
    ctx.resize(len);
    for (auto& t : ctx) t = get<std::uint32_t>(in);
    const auto tok = get<std::uint32_t>(in);
    const auto count = get<double>(in);
    rows.push_back({Context(ctx), tok, count});
  }
  return MarkovLM::from_table(std::move(vocab), order, alpha, rows);
}

void save_model(const std::string& path, const MarkovLM& lm) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
  write_model(out, lm);
}

MarkovLM load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return read_model(in);
}

}  // namespace wmtext
