#include "ptk/corpus/dedup.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "ptk/util/errors.hpp"
#include "ptk/util/hash.hpp"
#include "ptk/util/rng.hpp"

namespace ptk {

namespace {

constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

__extension__ typedef unsigned __int128 uint128_t;

std::uint64_t mod_mersenne61(uint128_t x) {
    std::uint64_t lo = static_cast<std::uint64_t>(x & kMersenne61);
    std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
    std::uint64_t r = lo + hi;
    while (r >= kMersenne61) r -= kMersenne61;
    return r;
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) words.push_back(text.substr(i, j - i));
        i = j;
    }
    return words;
}

}  // namespace

ExactDedupResult exact_dedup(std::vector<Document> docs) {
    ExactDedupResult result;
    std::unordered_set<Hash128, Hash128Hasher> seen;
    seen.reserve(docs.size());
    for (auto& d : docs) {
        if (seen.insert(murmur3_128(d.text)).second)
            result.kept.push_back(std::move(d));
        else
            ++result.removed;
    }
    return result;
}

void NearDedupOptions::validate() const {
    if (shingle_len == 0) throw ConfigError("near_dedup: shingle_len must be >= 1");
    if (num_hashes == 0 || bands == 0 || rows == 0) throw ConfigError("near_dedup: hashes, bands, rows must be >= 1");
    if (num_hashes != bands * rows) throw ConfigError("near_dedup: num_hashes must equal bands * rows");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("near_dedup: threshold must be in (0, 1)");
}

std::vector<std::uint64_t> word_shingles(std::string_view text, std::size_t shingle_len) {
    if (shingle_len == 0) throw ConfigError("word_shingles: shingle_len must be >= 1");
    const auto words = split_words(text);
    std::vector<std::uint64_t> out;
    auto hash_range = [&](std::size_t begin, std::size_t end) {
        std::string joined;
        for (std::size_t k = begin; k < end; ++k) {
            if (k > begin) joined.push_back(' ');
            joined.append(words[k]);
        }
        return hash64(joined, 0x5eed5eedULL);
    };
    if (words.size() <= shingle_len) {
        out.push_back(hash_range(0, words.size()));
    } else {
        out.reserve(words.size() - shingle_len + 1);
        for (std::size_t i = 0; i + shingle_len <= words.size(); ++i) out.push_back(hash_range(i, i + shingle_len));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double jaccard(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

MinHasher::MinHasher(std::size_t num_hashes, std::uint64_t seed) {
    Rng rng = Rng(seed).fork("minhash");
    a_.resize(num_hashes);
    b_.resize(num_hashes);
    for (std::size_t i = 0; i < num_hashes; ++i) {
        a_[i] = 1 + rng.below(kMersenne61 - 1);
        b_[i] = rng.below(kMersenne61);
    }
}

std::vector<std::uint64_t> MinHasher::signature(std::span<const std::uint64_t> shingles) const {
    std::vector<std::uint64_t> sig(a_.size(), std::numeric_limits<std::uint64_t>::max());
    for (std::uint64_t s : shingles) {
        const std::uint64_t x = mod_mersenne61(s);
        for (std::size_t i = 0; i < a_.size(); ++i) {
            const std::uint64_t h = mod_mersenne61(uint128_t(a_[i]) * x + b_[i]);
            if (h < sig[i]) sig[i] = h;
        }
    }
    return sig;
}

double MinHasher::estimate(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size() || a.empty()) throw DimensionError("MinHasher::estimate: signature size mismatch");
    std::size_t eq = 0;
    for (std::size_t i = 0; i < a.size(); ++i) eq += a[i] == b[i];
    return static_cast<double>(eq) / static_cast<double>(a.size());
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t UnionFind::find(std::size_t x) {
    while (parent_[x] != x) {
        parent_[x] = parent_[parent_[x]];
        x = parent_[x];
    }
    return x;
}

void UnionFind::unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
}

std::vector<std::vector<std::size_t>> UnionFind::groups(std::size_t min_size) {
    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t i = 0; i < parent_.size(); ++i) by_root[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, members] : by_root)
        if (members.size() >= min_size) out.push_back(std::move(members));
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
    return out;
}

DedupReport near_dedup(std::span<const Document> docs, const NearDedupOptions& options) {
    options.validate();
    const MinHasher hasher(options.num_hashes, options.seed);

    std::vector<std::vector<std::uint64_t>> sigs;
    sigs.reserve(docs.size());
    for (const auto& d : docs) sigs.push_back(hasher.signature(word_shingles(d.text, options.shingle_len)));

    std::set<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t band = 0; band < options.bands; ++band) {
        std::unordered_map<Hash128, std::vector<std::size_t>, Hash128Hasher> buckets;
        for (std::size_t i = 0; i < sigs.size(); ++i) {
            const auto* first = sigs[i].data() + band * options.rows;
            const auto key = murmur3_128(std::as_bytes(std::span(first, options.rows)), band);
            buckets[key].push_back(i);
        }
        for (const auto& [key, members] : buckets)
            for (std::size_t x = 0; x < members.size(); ++x)
                for (std::size_t y = x + 1; y < members.size(); ++y) candidates.emplace(members[x], members[y]);
    }

    UnionFind uf(docs.size());
    for (const auto& [i, j] : candidates)
        if (MinHasher::estimate(sigs[i], sigs[j]) >= options.threshold) uf.unite(i, j);

    DedupReport report;
    report.jaccard_threshold = options.threshold;
    report.candidate_pairs = candidates.size();
    for (const auto& group : uf.groups(2)) {
        auto& cluster = report.near_clusters.emplace_back();
        for (std::size_t idx : group) cluster.push_back(docs[idx].id);
    }
    return report;
}

std::vector<Document> drop_near_duplicates(std::vector<Document> docs, const DedupReport& report) {
    std::unordered_set<std::string> drop;
    for (const auto& cluster : report.near_clusters)
        for (std::size_t i = 1; i < cluster.size(); ++i) drop.insert(cluster[i]);
    std::vector<Document> kept;
    kept.reserve(docs.size());
    for (auto& d : docs)
        if (!drop.count(d.id)) kept.push_back(std::move(d));
    return kept;
}

}  // namespace ptk
