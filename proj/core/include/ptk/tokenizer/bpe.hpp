#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ptk/model/config.hpp"

namespace ptk {

struct SourceText {
    std::string text;
    std::string source;
};

struct BpeTrainOptions {
    std::size_t vocab_target = 0;
    /// Per-source multiplier on pair frequencies; unlisted sources use 1.
    std::map<std::string, double> upsample;
};

/// Byte-level BPE model. Ids: 0..2 special, 3..258 the 256 raw bytes, then
/// one id per learned merge result.
class TokenizerModel {
public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kPad = 2;
    static constexpr TokenId kNumSpecial = 3;
    static constexpr TokenId kFirstByte = kNumSpecial;
    static constexpr std::size_t kBaseVocab = kNumSpecial + 256;

    using Merge = std::pair<TokenId, TokenId>;

    /// Specials and byte tokens only.
    TokenizerModel();

    std::size_t size() const { return vocab_.size(); }
    const std::vector<std::string>& vocab() const { return vocab_; }
    const std::vector<Merge>& merges() const { return merges_; }
    const std::string& token_bytes(TokenId id) const { return vocab_.at(id); }
    bool is_special(TokenId id) const { return id < kNumSpecial; }

    static constexpr TokenId byte_token(unsigned char b) { return kFirstByte + b; }

    bool digit_split() const { return digit_split_; }
    bool whitespace_preserving() const { return whitespace_preserving_; }

    std::vector<TokenId> encode(std::string_view text) const;
    std::string decode(std::span<const TokenId> ids) const;

    /// Appends a merge of two existing tokens and returns the id of the result.
    /// A result whose bytes already exist reuses that token.
    TokenId add_merge(TokenId left, TokenId right);

    std::string to_json() const;
    static TokenizerModel from_json(std::string_view json);
    void save(const std::string& path) const;
    static TokenizerModel load(const std::string& path);

    friend bool operator==(const TokenizerModel& a, const TokenizerModel& b) {
        return a.vocab_ == b.vocab_ && a.merges_ == b.merges_;
    }

private:
    void encode_piece(std::string_view piece, std::vector<TokenId>& out) const;

    static std::uint64_t key(TokenId l, TokenId r) { return (std::uint64_t(l) << 32) | r; }

    std::vector<std::string> vocab_;
    std::vector<Merge> merges_;
    std::unordered_map<std::uint64_t, std::pair<std::size_t, TokenId>> merge_table_;  // -> (rank, result)
    std::unordered_map<std::string, TokenId> token_index_;
    bool digit_split_ = true;
    bool whitespace_preserving_ = true;
};

/// Greedy BPE over pretokenized pieces. Each round merges the pair with the
/// highest upsample-weighted count (ties: lexicographically smallest
/// (left bytes, right bytes)); stops at vocab_target or when the best pair
/// occurs fewer than twice. Throws ConfigError if vocab_target <= 259.
TokenizerModel train_bpe(std::span<const SourceText> corpus, const BpeTrainOptions& options);

}  // namespace ptk
