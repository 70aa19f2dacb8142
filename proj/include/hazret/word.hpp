#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace hazret {

using Symbol = std::uint32_t;
using Word = std::vector<Symbol>;

// A finite union of cylinders of one fixed word length over a common alphabet.
// Membership of an orbit window is an exact set lookup; windows are encoded as
// base-s integers when the code fits in 62 bits, with a plain word-set fallback
// otherwise. Both paths are exact.
class CylinderUnion {
 public:
  CylinderUnion(std::vector<Word> words, std::size_t alphabet_size)
      : alphabet_(alphabet_size) {
    if (alphabet_ < 2) throw std::invalid_argument("CylinderUnion: alphabet size must be >= 2");
    if (words.empty()) throw std::invalid_argument("CylinderUnion: empty word set");
    length_ = words.front().size();
    if (length_ == 0) throw std::invalid_argument("CylinderUnion: words must have length >= 1");
    for (const Word& w : words) {
      if (w.size() != length_) throw std::invalid_argument("CylinderUnion: words of unequal length");
      for (Symbol s : w)
        if (s >= alphabet_) throw std::invalid_argument("CylinderUnion: symbol out of alphabet");
    }
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    words_ = std::move(words);
    encodable_ = fits_u64(alphabet_, length_);
    if (encodable_) {
      codes_.reserve(words_.size());
      for (const Word& w : words_) codes_.push_back(encode(w));
      std::sort(codes_.begin(), codes_.end());
    }
  }

  static bool fits_u64(std::size_t alphabet, std::size_t length) {
    std::uint64_t code_cap = 1;
    for (std::size_t i = 0; i < length; ++i) {
      if (code_cap > (std::uint64_t(1) << 62) / alphabet) return false;
      code_cap *= alphabet;
    }
    return true;
  }

  std::size_t word_length() const { return length_; }
  std::size_t alphabet_size() const { return alphabet_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<Word>& words() const { return words_; }
  bool encodable() const { return encodable_; }
  const std::vector<std::uint64_t>& codes() const { return codes_; }

  std::uint64_t encode(std::span<const Symbol> w) const {
    std::uint64_t c = 0;
    for (Symbol s : w) c = c * alphabet_ + s;
    return c;
  }

  bool contains_code(std::uint64_t code) const {
    return std::binary_search(codes_.begin(), codes_.end(), code);
  }

  bool contains(std::span<const Symbol> window) const {
    if (window.size() != length_) return false;
    if (encodable_) return contains_code(encode(window));
    const auto it = std::lower_bound(words_.begin(), words_.end(), window,
        [](const Word& a, std::span<const Symbol> b) {
          return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
        });
    return it != words_.end() && std::equal(it->begin(), it->end(), window.begin(), window.end());
  }

 private:
  std::size_t alphabet_;
  std::size_t length_ = 0;
  std::vector<Word> words_;
  bool encodable_ = false;
  std::vector<std::uint64_t> codes_;
};

inline std::string word_to_string(const Word& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(w[i]);
  }
  return out;
}

}  // namespace hazret
