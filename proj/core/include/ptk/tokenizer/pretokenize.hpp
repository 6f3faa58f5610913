#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ptk {

enum class PieceKind { word, whitespace, digit, other };

struct PretokenPiece {
    std::string text;
    PieceKind kind;

    friend bool operator==(const PretokenPiece&, const PretokenPiece&) = default;
};

/// Splits text into merge-boundary pieces. Every ASCII digit is its own piece,
/// whitespace runs are kept verbatim, and the concatenation of the pieces is
/// always exactly the input (invalid UTF-8 bytes become single-byte pieces).
std::vector<PretokenPiece> pretokenize(std::string_view text);

const char* to_string(PieceKind kind);

}  // namespace ptk
