#pragma once

// WMLM binary container, version 1. All integers little-endian.
//
//   offset  field
//   0       magic "WMLM"
//   4       u32 format version (1)
//   8       u32 order
//   12      f64 alpha
//   20      u8  byte_fallback (0/1)
//   21      u32 number of word entries W (vocabulary minus reserved ids)
//           W x { u32 byte length, UTF-8 bytes }
//           u64 number of count rows R
//           R x { u8 context length L, L x u32 context ids, u32 token, f64 count }
//
// Rows are written sorted by (context length, context ids, token), so
// serializing the same model always produces the same bytes.

#include <iosfwd>
#include <string>

#include "wmtext/langmodel.hpp"

namespace wmtext {

inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const MarkovLM& lm);
/// Throws InvariantError on a malformed container.
MarkovLM read_model(std::istream& in);

void save_model(const std::string& path, const MarkovLM& lm);
MarkovLM load_model(const std::string& path);

}  // namespace wmtext
