#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aer {

/// One of the four answer positions of a question.
enum class Letter : std::uint8_t { A = 0, B = 1, C = 2, D = 3 };

inline constexpr std::array<Letter, 4> kAllLetters = {Letter::A, Letter::B, Letter::C, Letter::D};

constexpr int index_of(Letter l) { return static_cast<int>(l); }
constexpr char to_char(Letter l) { return static_cast<char>('A' + index_of(l)); }
std::optional<Letter> letter_from_char(char c);  // case-insensitive

/// A subset of {A,B,C,D}, stored as a 4-bit mask.
class LetterSet {
public:
    constexpr LetterSet() = default;
    constexpr LetterSet(std::initializer_list<Letter> letters) {
        for (Letter l : letters) insert(l);
    }

    static constexpr LetterSet from_mask(std::uint8_t mask) {
        LetterSet s;
        s.mask_ = mask & 0x0F;
        return s;
    }
    static constexpr LetterSet all() { return from_mask(0x0F); }

    /// Parses "A,B" / "b d" / "C". Throws std::invalid_argument on any
    /// token outside A-D. An empty or blank string yields the empty set.
    static LetterSet parse(std::string_view text);

    constexpr std::uint8_t mask() const { return mask_; }
    constexpr bool contains(Letter l) const { return (mask_ >> index_of(l)) & 1U; }
    constexpr void insert(Letter l) { mask_ |= static_cast<std::uint8_t>(1U << index_of(l)); }
    constexpr void erase(Letter l) { mask_ &= static_cast<std::uint8_t>(~(1U << index_of(l))); }
    constexpr bool empty() const { return mask_ == 0; }
    constexpr int size() const {
        int n = 0;
        for (Letter l : kAllLetters) n += contains(l) ? 1 : 0;
        return n;
    }

    constexpr bool is_subset_of(LetterSet other) const { return (mask_ & ~other.mask_) == 0; }
    constexpr bool intersects(LetterSet other) const { return (mask_ & other.mask_) != 0; }

    constexpr LetterSet operator|(LetterSet o) const { return from_mask(mask_ | o.mask_); }
    constexpr LetterSet operator&(LetterSet o) const { return from_mask(mask_ & o.mask_); }
    constexpr LetterSet operator-(LetterSet o) const { return from_mask(mask_ & ~o.mask_); }
    constexpr LetterSet& operator|=(LetterSet o) { mask_ |= o.mask_; return *this; }
    constexpr LetterSet& operator&=(LetterSet o) { mask_ &= o.mask_; return *this; }
    constexpr LetterSet& operator-=(LetterSet o) { mask_ &= static_cast<std::uint8_t>(~o.mask_); return *this; }

    constexpr auto operator<=>(const LetterSet&) const = default;

    std::vector<Letter> letters() const;

    /// Canonical form: sorted letters joined by commas, e.g. "A,C". Empty set -> "".
    std::string to_string() const;

private:
    std::uint8_t mask_ = 0;
};

}  // namespace aer
