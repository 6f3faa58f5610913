#include "ptk/tokenizer/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptk/tokenizer/pretokenize.hpp"
#include "ptk/util/errors.hpp"

namespace ptk {

namespace {

const char* const kSpecialNames[TokenizerModel::kNumSpecial] = {"<bos>", "<eos>", "<pad>"};

// Bytes <-> JSON-safe string: byte b becomes code point U+00bb.
std::string bytes_to_latin1_utf8(const std::string& bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char b : bytes) {
        if (b < 0x80) {
            out.push_back(static_cast<char>(b));
        } else {
            out.push_back(static_cast<char>(0xC0 | (b >> 6)));
            out.push_back(static_cast<char>(0x80 | (b & 0x3F)));
        }
    }
    return out;
}

std::string latin1_utf8_to_bytes(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
        } else if ((c & 0xE0) == 0xC0 && c <= 0xC3 && i + 1 < s.size()) {
            const auto c1 = static_cast<unsigned char>(s[++i]);
            out.push_back(static_cast<char>(((c & 0x03) << 6) | (c1 & 0x3F)));
        } else {
            throw ConfigError("tokenizer JSON: vocab entry outside U+0000..U+00FF");
        }
    }
    return out;
}

}  // namespace

TokenizerModel::TokenizerModel() {
    vocab_.reserve(kBaseVocab);
    for (const char* name : kSpecialNames) vocab_.emplace_back(name);
    for (int b = 0; b < 256; ++b) {
        vocab_.emplace_back(1, static_cast<char>(b));
        token_index_.emplace(vocab_.back(), static_cast<TokenId>(vocab_.size() - 1));
    }
}

TokenId TokenizerModel::add_merge(TokenId left, TokenId right) {
    if (left >= vocab_.size() || right >= vocab_.size() || is_special(left) || is_special(right))
        throw ConfigError("add_merge: invalid operand token");
    std::string joined = vocab_[left] + vocab_[right];
    TokenId result;
    if (auto it = token_index_.find(joined); it != token_index_.end()) {
        result = it->second;
    } else {
        result = static_cast<TokenId>(vocab_.size());
        vocab_.push_back(joined);
        token_index_.emplace(std::move(joined), result);
    }
    merge_table_.emplace(key(left, right), std::make_pair(merges_.size(), result));
    merges_.emplace_back(left, right);
    return result;
}

void TokenizerModel::encode_piece(std::string_view piece, std::vector<TokenId>& out) const {
    std::vector<TokenId> ids;
    ids.reserve(piece.size());
    for (unsigned char b : piece) ids.push_back(byte_token(b));

    while (ids.size() > 1) {
        std::size_t best_rank = std::numeric_limits<std::size_t>::max();
        TokenId best_left = 0, best_right = 0, best_result = 0;
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
            auto it = merge_table_.find(key(ids[i], ids[i + 1]));
            if (it != merge_table_.end() && it->second.first < best_rank) {
                best_rank = it->second.first;
                best_left = ids[i];
                best_right = ids[i + 1];
                best_result = it->second.second;
            }
        }
        if (best_rank == std::numeric_limits<std::size_t>::max()) break;
        std::size_t w = 0;
        for (std::size_t i = 0; i < ids.size();) {
            if (i + 1 < ids.size() && ids[i] == best_left && ids[i + 1] == best_right) {
                ids[w++] = best_result;
                i += 2;
            } else {
                ids[w++] = ids[i++];
            }
        }
        ids.resize(w);
    }
    out.insert(out.end(), ids.begin(), ids.end());
}

std::vector<TokenId> TokenizerModel::encode(std::string_view text) const {
    std::vector<TokenId> out;
    out.reserve(text.size());
    for (const auto& piece : pretokenize(text)) encode_piece(piece.text, out);
    return out;
}

std::string TokenizerModel::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (id >= vocab_.size()) throw InputError("decode: unknown token id " + std::to_string(id));
        if (is_special(id)) continue;
        out += vocab_[id];
    }
    return out;
}

std::string TokenizerModel::to_json() const {
    nlohmann::ordered_json j;
    auto vocab = nlohmann::json::array();
    for (std::size_t i = 0; i < vocab_.size(); ++i)
        vocab.push_back(is_special(static_cast<TokenId>(i)) ? vocab_[i] : bytes_to_latin1_utf8(vocab_[i]));
    auto merges = nlohmann::json::array();
    for (const auto& [l, r] : merges_) merges.push_back({l, r});
    j["vocab"] = std::move(vocab);
    j["merges"] = std::move(merges);
    j["special"] = {{"<bos>", kBos}, {"<eos>", kEos}, {"<pad>", kPad}};
    j["flags"] = {{"digit_split", digit_split_}, {"whitespace_preserving", whitespace_preserving_},
                  {"byte_fallback", true}, {"first_byte_id", kFirstByte}};
    return j.dump();
}

TokenizerModel TokenizerModel::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tokenizer JSON: ") + e.what());
    }
    TokenizerModel model;
    try {
        const auto& vocab = j.at("vocab");
        if (vocab.size() < kBaseVocab) throw ConfigError("tokenizer JSON: vocab lacks byte tokens");
        for (std::size_t i = kNumSpecial; i < kBaseVocab; ++i)
            if (latin1_utf8_to_bytes(vocab[i].get<std::string>()) != model.vocab_[i])
                throw ConfigError("tokenizer JSON: byte token table is not canonical");
        for (const auto& m : j.at("merges")) model.add_merge(m.at(0).get<TokenId>(), m.at(1).get<TokenId>());
        if (model.vocab_.size() != vocab.size()) throw ConfigError("tokenizer JSON: vocab/merges disagree");
        for (std::size_t i = kBaseVocab; i < vocab.size(); ++i)
            if (latin1_utf8_to_bytes(vocab[i].get<std::string>()) != model.vocab_[i])
                throw ConfigError("tokenizer JSON: vocab entry " + std::to_string(i) + " does not match merges");
        if (j.contains("flags")) {
            model.digit_split_ = j["flags"].value("digit_split", true);
            model.whitespace_preserving_ = j["flags"].value("whitespace_preserving", true);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tokenizer JSON: ") + e.what());
    }
    return model;
}

void TokenizerModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot write tokenizer: " + path);
    out << to_json() << '\n';
}

TokenizerModel TokenizerModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tokenizer: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

TokenizerModel train_bpe(std::span<const SourceText> corpus, const BpeTrainOptions& options) {
    if (options.vocab_target <= TokenizerModel::kBaseVocab)
        throw ConfigError("train_bpe: vocab_target must exceed " + std::to_string(TokenizerModel::kBaseVocab));
    for (const auto& [source, w] : options.upsample)
        if (!(w > 0.0)) throw ConfigError("train_bpe: upsample weight for '" + source + "' must be positive");

    struct WordStats {
        double weight = 0.0;
        std::uint64_t raw = 0;
    };
    std::map<std::string, WordStats> word_counts;
    for (const auto& doc : corpus) {
        double w = 1.0;
        if (auto it = options.upsample.find(doc.source); it != options.upsample.end()) w = it->second;
        for (const auto& piece : pretokenize(doc.text)) {
            if (piece.text.size() < 2) continue;  // nothing to merge
            auto& s = word_counts[piece.text];
            s.weight += w;
            s.raw += 1;
        }
    }

    struct Word {
        std::vector<TokenId> ids;
        double weight;
        std::uint64_t raw;
    };
    std::vector<Word> words;
    words.reserve(word_counts.size());
    for (const auto& [text, s] : word_counts) {
        Word w{{}, s.weight, s.raw};
        for (unsigned char b : text) w.ids.push_back(TokenizerModel::byte_token(b));
        words.push_back(std::move(w));
    }

    TokenizerModel model;
    struct PairStats {
        double weight = 0.0;
        std::uint64_t raw = 0;
    };
    std::unordered_map<std::uint64_t, PairStats> pairs;

    while (model.size() < options.vocab_target) {
        pairs.clear();
        for (const auto& w : words)
            for (std::size_t i = 0; i + 1 < w.ids.size(); ++i) {
                auto& p = pairs[(std::uint64_t(w.ids[i]) << 32) | w.ids[i + 1]];
                p.weight += w.weight;
                p.raw += w.raw;
            }
        if (pairs.empty()) break;

        std::uint64_t best_key = 0;
        const PairStats* best = nullptr;
        for (const auto& [k, s] : pairs) {
            if (best == nullptr || s.weight > best->weight) {
                best_key = k;
                best = &s;
                continue;
            }
            if (s.weight < best->weight) continue;
            const auto& kl = model.token_bytes(static_cast<TokenId>(k >> 32));
            const auto& kr = model.token_bytes(static_cast<TokenId>(k & 0xffffffffu));
            const auto& bl = model.token_bytes(static_cast<TokenId>(best_key >> 32));
            const auto& br = model.token_bytes(static_cast<TokenId>(best_key & 0xffffffffu));
            if (std::tie(kl, kr) < std::tie(bl, br)) {
                best_key = k;
                best = &s;
            }
        }
        if (best->raw < 2) break;

        const auto left = static_cast<TokenId>(best_key >> 32);
        const auto right = static_cast<TokenId>(best_key & 0xffffffffu);
        const TokenId result = model.add_merge(left, right);

        for (auto& w : words) {
            std::size_t out = 0;
            for (std::size_t i = 0; i < w.ids.size();) {
                if (i + 1 < w.ids.size() && w.ids[i] == left && w.ids[i + 1] == right) {
                    w.ids[out++] = result;
                    i += 2;
                } else {
                    w.ids[out++] = w.ids[i++];
                }
            }
            w.ids.resize(out);
        }
    }
    return model;
}

}  // namespace ptk
