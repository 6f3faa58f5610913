#include "ptk/corpus/shards.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ptk/util/errors.hpp"
#include "ptk/util/hash.hpp"
#include "ptk/util/rng.hpp"

namespace ptk {

namespace fs = std::filesystem;

CurateResult curate(std::vector<Document> docs, const CurateOptions& options) {
    CurateResult result;
    result.stats.input_docs = docs.size();

    if (options.exact_dedup) {
        auto exact = exact_dedup(std::move(docs));
        result.stats.exact_removed = exact.removed;
        docs = std::move(exact.kept);
    }
    if (options.near_dedup) {
        result.stats.near_report = near_dedup(docs, options.near);
        const std::size_t before = docs.size();
        docs = drop_near_duplicates(std::move(docs), result.stats.near_report);
        result.stats.near_removed = before - docs.size();
    }
    result.stats.near_report.exact_removed = result.stats.exact_removed;

    if (options.quality_filter) {
        const auto rules = default_quality_rules(options.quality);
        std::vector<Document> kept;
        for (auto& d : docs) {
            const auto verdict = quality_filter(d, rules);
            for (const auto& name : verdict.fired) ++result.stats.fired_rules[name];
            if (verdict.keep)
                kept.push_back(std::move(d));
            else
                ++result.stats.filtered;
        }
        docs = std::move(kept);
    }
    result.docs = std::move(docs);
    return result;
}

TokenStream assemble_token_stream(const std::vector<Document>& docs, const TokenizerModel& tokenizer,
                                  const BlendSpec& blend, const ShardOptions& options) {
    if (blend.empty()) throw ConfigError("build_shards: empty blend");
    TokenStream out;

    const auto leaves = blend.leaf_weights();
    std::unordered_map<std::string, std::size_t> leaf_index;
    for (std::size_t i = 0; i < leaves.size(); ++i) leaf_index.emplace(leaves[i].first, i);

    // Per-leaf document queues, shuffled with a leaf-labelled stream.
    std::vector<std::vector<std::size_t>> queues(leaves.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto it = leaf_index.find(docs[i].source);
        if (it == leaf_index.end()) {
            ++out.unblended_docs;
            continue;
        }
        queues[it->second].push_back(i);
    }
    const Rng root(options.seed);
    for (std::size_t l = 0; l < queues.size(); ++l) {
        Rng rng = root.fork("shuffle:" + leaves[l].first);
        auto& q = queues[l];
        for (std::size_t i = q.size(); i > 1; --i) std::swap(q[i - 1], q[rng.below(i)]);
    }

    std::vector<double> weights(leaves.size());
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        weights[l] = queues[l].empty() ? 0.0 : leaves[l].second;
        if (queues[l].empty()) out.missing_leaves.push_back(leaves[l].first);
    }
    bool any = false;
    for (double w : weights) any = any || w > 0.0;
    if (!any) throw PipelineError("build_shards: no documents match the blend leaves");

    std::unordered_map<std::size_t, std::vector<TokenId>> encoded;
    auto tokens_of = [&](std::size_t doc) -> const std::vector<TokenId>& {
        auto it = encoded.find(doc);
        if (it != encoded.end()) return it->second;
        auto ids = tokenizer.encode(docs[doc].text);
        if (options.append_eos) ids.push_back(TokenizerModel::kEos);
        return encoded.emplace(doc, std::move(ids)).first->second;
    };

    auto emit = [&](std::size_t doc, std::size_t leaf, std::uint64_t limit) {
        const auto& ids = tokens_of(doc);
        const std::uint64_t n = std::min<std::uint64_t>(ids.size(), limit);
        if (n == 0) return;
        out.segments.push_back({docs[doc].id, leaves[leaf].first, out.tokens.size(), n});
        out.tokens.insert(out.tokens.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
        out.per_leaf_counts[leaves[leaf].first] += n;
    };

    Rng rng = root.fork("blend-sample");
    if (options.token_budget == 0) {
        std::vector<std::size_t> cursor(leaves.size(), 0);
        std::size_t remaining = 0;
        for (const auto& q : queues) remaining += q.size();
        while (remaining > 0) {
            const std::size_t l = rng.categorical(weights);
            emit(queues[l][cursor[l]], l, std::numeric_limits<std::uint64_t>::max());
            if (++cursor[l] == queues[l].size()) weights[l] = 0.0;
            --remaining;
        }
    } else {
        std::vector<std::size_t> cursor(leaves.size(), 0);
        while (out.tokens.size() < options.token_budget) {
            const std::size_t l = rng.categorical(weights);
            const std::size_t doc = queues[l][cursor[l]];
            cursor[l] = (cursor[l] + 1) % queues[l].size();
            emit(doc, l, options.token_budget - out.tokens.size());
        }
    }
    if (out.tokens.empty()) throw PipelineError("build_shards: corpus produced no tokens");
    return out;
}

void write_token_file(const std::string& path, const std::vector<TokenId>& tokens) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot write token file: " + path);
    std::vector<unsigned char> buf(tokens.size() * 4);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (int b = 0; b < 4; ++b) buf[i * 4 + b] = static_cast<unsigned char>(tokens[i] >> (8 * b));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw PipelineError("failed writing token file: " + path);
}

std::vector<TokenId> read_token_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PipelineError("cannot open token file: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() % 4 != 0) throw PipelineError("token file size is not a multiple of 4: " + path);
    std::vector<TokenId> tokens(buf.size() / 4);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        tokens[i] = TokenId(buf[i * 4]) | (TokenId(buf[i * 4 + 1]) << 8) | (TokenId(buf[i * 4 + 2]) << 16) |
                    (TokenId(buf[i * 4 + 3]) << 24);
    return tokens;
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PipelineError("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return murmur3_128(bytes).hex();
}

ShardManifest build_shards(const std::vector<Document>& docs, const TokenizerModel& tokenizer,
                           const BlendSpec& blend, const ShardOptions& options, const std::string& out_dir) {
    if (options.shard_size == 0) throw ConfigError("build_shards: shard_size must be >= 1");
    if (docs.empty()) throw PipelineError("build_shards: empty post-filter corpus");
    const TokenStream stream = assemble_token_stream(docs, tokenizer, blend, options);

    fs::create_directories(out_dir);
    ShardManifest m;
    m.seed = options.seed;
    m.shard_size = options.shard_size;
    m.token_budget = options.token_budget;
    m.vocab_size = tokenizer.size();
    m.total_tokens = stream.tokens.size();
    m.per_leaf_counts = stream.per_leaf_counts;
    m.segments = stream.segments;
    m.unblended_docs = stream.unblended_docs;
    m.missing_leaves = stream.missing_leaves;

    for (std::size_t begin = 0, idx = 0; begin < stream.tokens.size(); begin += options.shard_size, ++idx) {
        const std::size_t end = std::min(stream.tokens.size(), begin + options.shard_size);
        char name[32];
        std::snprintf(name, sizeof(name), "shard_%05zu.bin", idx);
        const std::string path = (fs::path(out_dir) / name).string();
        write_token_file(path, std::vector<TokenId>(stream.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                                                    stream.tokens.begin() + static_cast<std::ptrdiff_t>(end)));
        m.shards.push_back({name, end - begin, file_checksum(path)});
    }
    m.save((fs::path(out_dir) / "manifest.json").string());
    return m;
}

std::vector<TokenId> read_all_shards(const ShardManifest& manifest, const std::string& dir) {
    std::vector<TokenId> all;
    for (const auto& s : manifest.shards) {
        auto part = read_token_file((fs::path(dir) / s.file).string());
        if (part.size() != s.tokens) throw PipelineError("shard " + s.file + " token count mismatch");
        all.insert(all.end(), part.begin(), part.end());
    }
    return all;
}

void verify_shards(const ShardManifest& manifest, const std::string& dir) {
    std::uint64_t total = 0;
    for (const auto& s : manifest.shards) {
        const std::string path = (fs::path(dir) / s.file).string();
        if (!fs::exists(path)) throw PipelineError("missing shard " + s.file);
        if (file_checksum(path) != s.checksum) throw PipelineError("checksum mismatch for " + s.file);
        if (fs::file_size(path) != s.tokens * 4) throw PipelineError("size mismatch for " + s.file);
        total += s.tokens;
    }
    if (total != manifest.total_tokens) throw PipelineError("manifest total_tokens mismatch");
}

std::string ShardManifest::to_json() const {
    nlohmann::ordered_json j;
    auto sj = nlohmann::ordered_json::array();
    for (const auto& s : shards) sj.push_back({{"file", s.file}, {"tokens", s.tokens}, {"checksum", s.checksum}});
    j["shards"] = std::move(sj);
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [leaf, n] : per_leaf_counts) counts[leaf] = n;
    j["per_leaf_counts"] = std::move(counts);
    j["seed"] = seed;
    j["shard_size"] = shard_size;
    j["token_budget"] = token_budget;
    j["vocab_size"] = vocab_size;
    j["total_tokens"] = total_tokens;
    j["unblended_docs"] = unblended_docs;
    j["missing_leaves"] = missing_leaves;
    auto seg = nlohmann::ordered_json::array();
    for (const auto& s : segments)
        seg.push_back({{"doc", s.doc}, {"leaf", s.leaf}, {"offset", s.offset}, {"tokens", s.tokens}});
    j["segments"] = std::move(seg);
    return j.dump(1);
}

ShardManifest ShardManifest::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ShardManifest m;
        for (const auto& s : j.at("shards"))
            m.shards.push_back({s.at("file").get<std::string>(), s.at("tokens").get<std::uint64_t>(),
                                s.at("checksum").get<std::string>()});
        for (const auto& [leaf, n] : j.at("per_leaf_counts").items()) m.per_leaf_counts[leaf] = n.get<std::uint64_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.shard_size = j.value("shard_size", std::uint64_t{0});
        m.token_budget = j.value("token_budget", std::uint64_t{0});
        m.vocab_size = j.value("vocab_size", std::uint64_t{0});
        m.total_tokens = j.value("total_tokens", std::uint64_t{0});
        m.unblended_docs = j.value("unblended_docs", std::size_t{0});
        if (j.contains("missing_leaves")) m.missing_leaves = j["missing_leaves"].get<std::vector<std::string>>();
        if (j.contains("segments"))
            for (const auto& s : j["segments"])
                m.segments.push_back({s.at("doc").get<std::string>(), s.at("leaf").get<std::string>(),
                                      s.at("offset").get<std::uint64_t>(), s.at("tokens").get<std::uint64_t>()});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(std::string("manifest JSON: ") + e.what());
    }
}

ShardManifest ShardManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PipelineError("cannot open manifest: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void ShardManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot write manifest: " + path);
    out << to_json() << '\n';
}

ShardOptions ShardManifest::options() const {
    ShardOptions o;
    o.seed = seed;
    o.shard_size = shard_size;
    o.token_budget = token_budget;
    return o;
}

}  // namespace ptk
