#include "textctrl/text/vocab.hpp"

namespace textctrl::text {

CharVocab::CharVocab() {
    symbols_ = "0123456789"
               "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
               "abcdefghijklmnopqrstuvwxyz"
               ".,!?-'\":; ";
    for (int i = 0; i < 256; ++i) index_of_[i] = -1;
    for (size_t i = 0; i < symbols_.size(); ++i)
        index_of_[uint8_t(symbols_[i])] = int(i) + 1;
}

const CharVocab& CharVocab::instance() {
    static const CharVocab v;
    return v;
}

int CharVocab::index(char c) const {
    int idx = index_of_[uint8_t(c)];
    TC_CHECK(idx >= 0, std::string("character not in vocab: '") + c + "'");
    return idx;
}

char CharVocab::symbol(int idx) const {
    TC_CHECK(idx >= 1 && idx < size(), "symbol index out of range: " + std::to_string(idx));
    return symbols_[size_t(idx) - 1];
}

std::vector<int> CharVocab::tokenize(const std::string& text) const {
    TC_CHECK(int(text.size()) <= max_len(),
             "text longer than " + std::to_string(max_len()) + " chars: \"" + text + "\"");
    std::vector<int> ids(size_t(max_len()), pad());
    for (size_t i = 0; i < text.size(); ++i) ids[i] = index(text[i]);
    return ids;
}

std::string CharVocab::detokenize(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (id == pad()) break;
        out += symbol(id);
    }
    return out;
}

} // namespace textctrl::text
