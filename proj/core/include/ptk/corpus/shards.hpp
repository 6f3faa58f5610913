#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ptk/corpus/blend.hpp"
#include "ptk/corpus/dedup.hpp"
#include "ptk/corpus/document.hpp"
#include "ptk/corpus/quality.hpp"
#include "ptk/tokenizer/bpe.hpp"

namespace ptk {

struct CurateOptions {
    bool exact_dedup = true;
    bool near_dedup = true;
    bool quality_filter = true;
    NearDedupOptions near;
    QualityThresholds quality;
};

struct CurateStats {
    std::size_t input_docs = 0;
    std::size_t exact_removed = 0;
    std::size_t near_removed = 0;
    std::size_t filtered = 0;
    std::map<std::string, std::size_t> fired_rules;
    DedupReport near_report;
};

struct CurateResult {
    std::vector<Document> docs;
    CurateStats stats;
};

/// Exact dedup, then near dedup, then heuristic quality filtering.
CurateResult curate(std::vector<Document> docs, const CurateOptions& options);

struct ShardOptions {
    std::size_t shard_size = 1 << 20;  // tokens per shard file
    std::uint64_t seed = 0;
    /// 0: every document exactly once, in blend-guided order. Otherwise leaves
    /// are drawn from the blend until exactly this many tokens are emitted.
    std::uint64_t token_budget = 0;
    bool append_eos = true;
};

struct ShardInfo {
    std::string file;
    std::uint64_t tokens = 0;
    std::string checksum;  // murmur3-128 of the file bytes, hex
};

/// One emitted document (or truncated tail of one) in the global token stream.
struct ShardSegment {
    std::string doc;
    std::string leaf;
    std::uint64_t offset = 0;
    std::uint64_t tokens = 0;
};

struct ShardManifest {
    std::vector<ShardInfo> shards;
    std::map<std::string, std::uint64_t> per_leaf_counts;
    std::uint64_t seed = 0;
    std::uint64_t shard_size = 0;
    std::uint64_t token_budget = 0;
    std::uint64_t total_tokens = 0;
    std::uint64_t vocab_size = 0;  // of the tokenizer that produced the ids
    std::size_t unblended_docs = 0;
    std::vector<std::string> missing_leaves;
    std::vector<ShardSegment> segments;

    std::string to_json() const;
    static ShardManifest from_json(std::string_view json);
    static ShardManifest load(const std::string& path);
    void save(const std::string& path) const;

    ShardOptions options() const;
};

struct TokenStream {
    std::vector<TokenId> tokens;
    std::vector<ShardSegment> segments;
    std::map<std::string, std::uint64_t> per_leaf_counts;
    std::size_t unblended_docs = 0;
    std::vector<std::string> missing_leaves;
};

/// Encodes and orders documents into one token stream without touching disk.
/// Documents whose source is not a blend leaf are skipped (counted). Throws
/// PipelineError when nothing remains.
TokenStream assemble_token_stream(const std::vector<Document>& docs, const TokenizerModel& tokenizer,
                                  const BlendSpec& blend, const ShardOptions& options);

/// Writes shard_NNNNN.bin (u32 little-endian ids) plus manifest.json into out_dir.
ShardManifest build_shards(const std::vector<Document>& docs, const TokenizerModel& tokenizer,
                           const BlendSpec& blend, const ShardOptions& options, const std::string& out_dir);

void write_token_file(const std::string& path, const std::vector<TokenId>& tokens);
std::vector<TokenId> read_token_file(const std::string& path);

/// Concatenation of all shards listed in the manifest (files relative to dir).
std::vector<TokenId> read_all_shards(const ShardManifest& manifest, const std::string& dir);

/// Throws PipelineError if any shard is missing or fails its checksum.
void verify_shards(const ShardManifest& manifest, const std::string& dir);

std::string file_checksum(const std::string& path);

}  // namespace ptk
