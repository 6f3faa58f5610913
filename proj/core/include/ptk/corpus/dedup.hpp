#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ptk/corpus/document.hpp"

namespace ptk {

struct ExactDedupResult {
    std::vector<Document> kept;
    std::size_t removed = 0;
};

/// Keeps the first document for each 128-bit content hash of its full text.
ExactDedupResult exact_dedup(std::vector<Document> docs);

struct NearDedupOptions {
    std::size_t num_hashes = 128;
    std::size_t shingle_len = 5;
    std::size_t bands = 16;
    std::size_t rows = 8;
    double threshold = 0.8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DedupReport {
    std::size_t exact_removed = 0;
    /// Disjoint clusters of document ids, each of size >= 2, members in input order.
    std::vector<std::vector<std::string>> near_clusters;
    double jaccard_threshold = 0.0;
    std::size_t candidate_pairs = 0;
};

/// Sorted, unique 64-bit hashes of the word shingles of `text` (whitespace
/// tokenized). Texts with fewer than `shingle_len` words yield one shingle.
std::vector<std::uint64_t> word_shingles(std::string_view text, std::size_t shingle_len);

/// Exact Jaccard of two sorted unique sets.
double jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Universal-hash family h_i(x) = (a_i * x + b_i) mod (2^61 - 1).
class MinHasher {
public:
    MinHasher(std::size_t num_hashes, std::uint64_t seed);

    std::vector<std::uint64_t> signature(std::span<const std::uint64_t> shingles) const;
    std::size_t num_hashes() const { return a_.size(); }

    /// Fraction of equal signature slots.
    static double estimate(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

private:
    std::vector<std::uint64_t> a_;
    std::vector<std::uint64_t> b_;
};

/// MinHash + LSH banding; candidate pairs whose estimated Jaccard reaches the
/// threshold are union-found into clusters.
DedupReport near_dedup(std::span<const Document> docs, const NearDedupOptions& options);

/// Drops every member of each cluster except its first.
std::vector<Document> drop_near_duplicates(std::vector<Document> docs, const DedupReport& report);

/// Minimal disjoint-set forest.
class UnionFind {
public:
    explicit UnionFind(std::size_t n);
    std::size_t find(std::size_t x);
    void unite(std::size_t a, std::size_t b);
    /// Components of size >= min_size, each sorted, ordered by smallest member.
    std::vector<std::vector<std::size_t>> groups(std::size_t min_size = 2);

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> rank_;
};

}  // namespace ptk
