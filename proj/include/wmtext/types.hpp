#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmtext {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;
using TokenView = std::span<const TokenId>;

/// Reserved begin-of-sequence id present in every vocabulary.
inline constexpr TokenId kBosId = 0;

/// Raised when a documented invariant of an internal structure is violated
/// (corrupt model file, inconsistent tables). Maps to CLI exit code 4.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wmtext
