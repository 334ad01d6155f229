#include "aer/letters.hpp"

#include <stdexcept>

namespace aer {

std::optional<Letter> letter_from_char(char c) {
    switch (c) {
        case 'A': case 'a': return Letter::A;
        case 'B': case 'b': return Letter::B;
        case 'C': case 'c': return Letter::C;
        case 'D': case 'd': return Letter::D;
        default: return std::nullopt;
    }
}

LetterSet LetterSet::parse(std::string_view text) {
    LetterSet out;
    std::size_t i = 0;
    auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (i < text.size()) {
        while (i < text.size() && is_sep(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_sep(text[i])) ++i;
        if (start == i) continue;
        std::string_view token = text.substr(start, i - start);
        auto letter = token.size() == 1 ? letter_from_char(token[0]) : std::nullopt;
        if (!letter) {
            throw std::invalid_argument("invalid answer letter '" + std::string(token) + "'");
        }
        out.insert(*letter);
    }
    return out;
}

std::vector<Letter> LetterSet::letters() const {
    std::vector<Letter> out;
    for (Letter l : kAllLetters) {
        if (contains(l)) out.push_back(l);
    }
    return out;
}

std::string LetterSet::to_string() const {
    std::string out;
    for (Letter l : kAllLetters) {
        if (!contains(l)) continue;
        if (!out.empty()) out.push_back(',');
        out.push_back(to_char(l));
    }
    return out;
}

}  // namespace aer
