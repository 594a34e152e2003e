#pragma once

#include <vector>

namespace sscap {

using TokenSeq = std::vector<int>;

// Reserved token ids; attribute tokens start at ATTR_BASE.
inline constexpr int PAD = 0;
inline constexpr int BOS = 1;
inline constexpr int EOS = 2;
inline constexpr int ATTR_BASE = 3;

}  // namespace sscap
