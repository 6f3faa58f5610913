#include "ptk/tokenizer/pretokenize.hpp"

#include <cstdint>

namespace ptk {

namespace {

// Length of the valid UTF-8 sequence starting at s[i], or 0 when invalid.
std::size_t utf8_length(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return 1;
    std::size_t len;
    std::uint32_t cp;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0;
    }
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return 0;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    return len;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_ascii_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

}  // namespace

const char* to_string(PieceKind kind) {
    switch (kind) {
        case PieceKind::word: return "word";
        case PieceKind::whitespace: return "whitespace";
        case PieceKind::digit: return "digit";
        case PieceKind::other: return "other";
    }
    return "?";
}

std::vector<PretokenPiece> pretokenize(std::string_view text) {
    std::vector<PretokenPiece> pieces;
    std::size_t i = 0;
    auto push = [&](std::size_t begin, std::size_t end, PieceKind kind) {
        pieces.push_back({std::string(text.substr(begin, end - begin)), kind});
    };

    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_digit(c)) {
            push(i, i + 1, PieceKind::digit);
            ++i;
        } else if (is_space(c)) {
            std::size_t j = i;
            while (j < text.size() && is_space(static_cast<unsigned char>(text[j]))) ++j;
            push(i, j, PieceKind::whitespace);
            i = j;
        } else if (is_ascii_letter(c) || c >= 0x80) {
            const std::size_t len = utf8_length(text, i);
            if (len == 0) {
                push(i, i + 1, PieceKind::other);
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < text.size()) {
                const auto cj = static_cast<unsigned char>(text[j]);
                if (is_ascii_letter(cj)) {
                    ++j;
                } else if (cj >= 0x80) {
                    const std::size_t l = utf8_length(text, j);
                    if (l == 0) break;
                    j += l;
                } else {
                    break;
                }
            }
            push(i, j, PieceKind::word);
            i = j;
        } else {
            // ASCII punctuation, symbols and control characters: runs of them.
            std::size_t j = i;
            while (j < text.size()) {
                const auto cj = static_cast<unsigned char>(text[j]);
                if (cj >= 0x80 || is_digit(cj) || is_space(cj) || is_ascii_letter(cj)) break;
                ++j;
            }
            push(i, j, PieceKind::other);
            i = j;
        }
    }
    return pieces;
}

}  // namespace ptk
