#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazret/word.hpp"

namespace testutil {

// "0110" -> Word{0,1,1,0}; digits only, for compact fixtures.
inline hazret::Word W(const std::string& digits) {
  hazret::Word w;
  w.reserve(digits.size());
  for (char c : digits) w.push_back(static_cast<hazret::Symbol>(c - '0'));
  return w;
}

inline hazret::CylinderUnion CU(std::initializer_list<std::string> words,
                                std::size_t alphabet = 2) {
  std::vector<hazret::Word> ws;
  for (const auto& s : words) ws.push_back(W(s));
  return hazret::CylinderUnion(std::move(ws), alphabet);
}

}  // namespace testutil
