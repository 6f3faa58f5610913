#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "ptk/corpus/dedup.hpp"
#include "ptk/util/errors.hpp"
#include "ptk/util/hash.hpp"
#include "ptk/util/rng.hpp"

namespace ptk {
namespace {

std::string words(std::size_t from, std::size_t to, const std::string& prefix = "w") {
    std::string s;
    for (std::size_t i = from; i < to; ++i) s += (i > from ? " " : "") + prefix + std::to_string(i);
    return s;
}

Document doc(std::string id, std::string text) { return {std::move(id), std::move(text), "src", "cat"}; }

TEST(ExactDedup, ThreeIdentical) {
    auto r = exact_dedup({doc("a", "same"), doc("b", "same"), doc("c", "same")});
    EXPECT_EQ(r.removed, 2u);
    ASSERT_EQ(r.kept.size(), 1u);
    EXPECT_EQ(r.kept[0].id, "a");
}

TEST(ExactDedup, AllDistinct) {
    EXPECT_EQ(exact_dedup({doc("a", "x"), doc("b", "y"), doc("c", "x ")}).removed, 0u);
}

TEST(ExactDedup, PlantedDuplicatesMatchPairwiseOracleAndAreIdempotent) {
    Rng rng(1);
    std::vector<Document> docs;
    for (int i = 0; i < 300; ++i) {
        if (!docs.empty() && rng.uniform() < 0.3) {
            docs.push_back(doc("d" + std::to_string(i), docs[rng.below(docs.size())].text));
        } else {
            docs.push_back(doc("d" + std::to_string(i), "text " + std::to_string(rng.next_u64() % 50)));
        }
    }
    std::size_t expected = 0;
    for (std::size_t i = 0; i < docs.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (docs[j].text == docs[i].text) {
                ++expected;
                break;
            }
    auto first = exact_dedup(docs);
    EXPECT_EQ(first.removed, expected);
    EXPECT_EQ(first.kept.size() + first.removed, docs.size());
    auto second = exact_dedup(first.kept);
    EXPECT_EQ(second.removed, 0u);
    EXPECT_EQ(second.kept, first.kept);
}

TEST(Shingles, ShortDocIsOneShingle) {
    EXPECT_EQ(word_shingles("a b", 5).size(), 1u);
    EXPECT_EQ(word_shingles(words(0, 10), 5).size(), 6u);
    EXPECT_EQ(word_shingles("a  b\n\tc", 1).size(), 3u);
}

TEST(Jaccard, Exact) {
    const std::vector<std::uint64_t> a{1, 2, 3, 4}, b{3, 4, 5, 6};
    EXPECT_DOUBLE_EQ(jaccard(a, b), 2.0 / 6.0);
    EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
}

TEST(MinHash, ConstructedHalfJaccardSets) {
    std::vector<std::uint64_t> a, b;
    for (std::uint64_t i = 0; i < 150; ++i) a.push_back(mix64(i));
    for (std::uint64_t i = 50; i < 200; ++i) b.push_back(mix64(i));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ASSERT_DOUBLE_EQ(jaccard(a, b), 0.5);
    const MinHasher mh(128, 0);
    EXPECT_NEAR(MinHasher::estimate(mh.signature(a), mh.signature(b)), 0.5, 0.10);
}

TEST(MinHash, ConstructedHalfJaccardTexts) {
    // Shifted windows over distinct words: (N-4-k)/(N-4+k) = 0.5 with N-4 = 3k.
    const auto a = word_shingles(words(0, 124), 5);
    const auto b = word_shingles(words(40, 164), 5);
    ASSERT_DOUBLE_EQ(jaccard(a, b), 0.5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const MinHasher mh(128, seed);
        EXPECT_NEAR(MinHasher::estimate(mh.signature(a), mh.signature(b)), 0.5, 0.10) << seed;
    }
}

TEST(NearDedup, IdenticalClusterAndDisjointApart) {
    const std::vector<Document> docs{doc("a", words(0, 60)), doc("b", words(0, 60)), doc("c", words(0, 60, "z"))};
    const auto r = near_dedup(docs, {});
    ASSERT_EQ(r.near_clusters.size(), 1u);
    EXPECT_EQ(r.near_clusters[0], (std::vector<std::string>{"a", "b"}));
    EXPECT_DOUBLE_EQ(r.jaccard_threshold, 0.8);
}

TEST(NearDedup, OptionsValidated) {
    NearDedupOptions o;
    o.bands = 10;
    EXPECT_THROW(o.validate(), ConfigError);
    NearDedupOptions z;
    z.shingle_len = 0;
    EXPECT_THROW(z.validate(), ConfigError);
}

// Partition of `n` docs into clusters from pairs with exact Jaccard >= thr.
std::vector<std::size_t> brute_force_labels(const std::vector<std::vector<std::uint64_t>>& sh, double thr) {
    UnionFind uf(sh.size());
    for (std::size_t i = 0; i < sh.size(); ++i)
        for (std::size_t j = i + 1; j < sh.size(); ++j)
            if (jaccard(sh[i], sh[j]) >= thr) uf.unite(i, j);
    std::vector<std::size_t> label(sh.size());
    for (std::size_t i = 0; i < sh.size(); ++i) label[i] = uf.find(i);
    return label;
}

// True when every cluster of `fine` lies inside a single cluster of `coarse`.
bool refines(const std::vector<std::size_t>& fine, const std::vector<std::size_t>& coarse) {
    std::map<std::size_t, std::size_t> image;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        auto [it, fresh] = image.emplace(fine[i], coarse[i]);
        if (!fresh && it->second != coarse[i]) return false;
    }
    return true;
}

// Families of variants of a base text, with mutation levels spread so that
// pair similarities span the whole [0, 1] range around the threshold.
std::vector<Document> family_corpus(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<Document> docs;
    std::size_t family = 0;
    while (docs.size() < n) {
        std::vector<std::string> base;
        const std::size_t len = 40 + rng.below(80);
        for (std::size_t i = 0; i < len; ++i) base.push_back("v" + std::to_string(rng.below(5000)));
        const std::size_t members = std::min<std::size_t>(1 + rng.below(6), n - docs.size());
        for (std::size_t m = 0; m < members; ++m) {
            auto w = base;
            const std::size_t edits = m == 0 ? 0 : rng.below(len / 6 + 1);
            for (std::size_t e = 0; e < edits; ++e) w[rng.below(len)] = "e" + std::to_string(rng.below(100000));
            std::string text;
            for (const auto& x : w) text += (text.empty() ? "" : " ") + x;
            docs.push_back(doc("f" + std::to_string(family) + "m" + std::to_string(m), text));
        }
        ++family;
    }
    return docs;
}

TEST(NearDedup, AgreesWithBruteForceOutsideBoundaryBand) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto docs = family_corpus(seed, 200);
        NearDedupOptions opt;
        opt.seed = seed;
        const auto report = near_dedup(docs, opt);

        std::vector<std::vector<std::uint64_t>> sh;
        for (const auto& d : docs) sh.push_back(word_shingles(d.text, opt.shingle_len));
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < docs.size(); ++i) index[docs[i].id] = i;
        std::vector<std::size_t> got(docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) got[i] = docs.size() + i;  // singletons
        std::set<std::string> seen;
        for (std::size_t c = 0; c < report.near_clusters.size(); ++c) {
            EXPECT_GE(report.near_clusters[c].size(), 2u);
            for (const auto& id : report.near_clusters[c]) {
                EXPECT_TRUE(seen.insert(id).second) << "clusters overlap at " << id;
                got[index.at(id)] = c;
            }
        }
        const auto strict = brute_force_labels(sh, opt.threshold + 0.1);
        const auto loose = brute_force_labels(sh, opt.threshold - 0.1);
        EXPECT_TRUE(refines(strict, got)) << "seed " << seed;
        EXPECT_TRUE(refines(got, loose)) << "seed " << seed;

        std::size_t boundary_pairs = 0, clear_pairs = 0;
        for (std::size_t i = 0; i < sh.size(); ++i)
            for (std::size_t j = i + 1; j < sh.size(); ++j) {
                const double jac = jaccard(sh[i], sh[j]);
                if (jac > 0.0) (std::abs(jac - opt.threshold) <= 0.1 ? boundary_pairs : clear_pairs)++;
            }
        EXPECT_GT(clear_pairs, 50u);  // the corpus actually exercises both sides
    }
}

TEST(NearDedup, DropKeepsFirstOfEachCluster) {
    const std::vector<Document> docs{doc("a", words(0, 60)), doc("b", words(0, 60)), doc("c", words(0, 60, "z")),
                                     doc("d", words(0, 60))};
    const auto kept = drop_near_duplicates(docs, near_dedup(docs, {}));
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].id, "a");
    EXPECT_EQ(kept[1].id, "c");
}

}  // namespace
}  // namespace ptk
