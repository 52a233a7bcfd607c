#pragma once

#include <string>
#include <vector>

#include "textctrl/core/tensor.hpp"

namespace textctrl::text {

// Fixed character inventory shared by the text encoder and the recognizer.
// Index 0 is the pad token; symbols map bijectively onto 1..size-1.
class CharVocab {
public:
    static const CharVocab& instance();

    int size() const { return int(symbols_.size()) + 1; }
    int pad() const { return 0; }
    int max_len() const { return 24; }

    bool contains(char c) const { return index_of_[uint8_t(c)] >= 0; }
    int index(char c) const;        // errors on out-of-vocab, naming the char
    char symbol(int idx) const;     // idx in [1, size)

    // right-padded to max_len; errors on overflow or out-of-vocab chars
    std::vector<int> tokenize(const std::string& text) const;
    std::string detokenize(const std::vector<int>& ids) const;  // stops at pad

private:
    CharVocab();
    std::string symbols_;
    int index_of_[256];
};

} // namespace textctrl::text
