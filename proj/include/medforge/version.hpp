#pragma once

namespace medforge {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kCorpusFormatVersion = 1;

}  // namespace medforge
