#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ptk/corpus/dedup.hpp"
#include "ptk/model/transformer.hpp"
#include "ptk/tokenizer/bpe.hpp"
#include "ptk/train/throughput.hpp"
#include "ptk/util/rng.hpp"

namespace {

ptk::ModelConfig small_model(std::size_t seq) {
    ptk::ModelConfig c;
    c.num_layers = 2;
    c.hidden_dim = 64;
    c.num_heads = 8;
    c.num_kv_heads = 2;
    c.head_dim = 8;
    c.ffn_dim = 256;
    c.seq_len = seq;
    c.vocab_size = 512;
    return c;
}

std::vector<ptk::TokenId> random_tokens(std::size_t n, std::size_t vocab, std::uint64_t seed) {
    ptk::Rng rng(seed);
    std::vector<ptk::TokenId> t(n);
    for (auto& x : t) x = static_cast<ptk::TokenId>(rng.next_u64() % vocab);
    return t;
}

std::string synthetic_text(std::size_t words, std::uint64_t seed) {
    static const char* vocab[] = {"the", "model", "data", "token", "train", "loss", "value", "3141", "code", "{",
                                  "}", "return", "int", "for", "while", "und", "le", "の"};
    ptk::Rng rng(seed);
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        s += vocab[rng.next_u64() % std::size(vocab)];
        s += (i % 13 == 12) ? '\n' : ' ';
    }
    return s;
}

void BM_Forward(benchmark::State& state) {
    const auto seq = static_cast<std::size_t>(state.range(0));
    const auto cfg = small_model(seq);
    ptk::Rng rng(1);
    const auto params = ptk::init_params<float>(cfg, rng);
    const auto tokens = random_tokens(seq, cfg.vocab_size, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ptk::transformer_forward(cfg, params, tokens));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seq));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

void BM_LossAndGrad(benchmark::State& state) {
    const auto cfg = small_model(64);
    ptk::Rng rng(1);
    const auto params = ptk::init_params<float>(cfg, rng);
    const auto tokens = random_tokens(64, cfg.vocab_size, 3);
    for (auto _ : state) benchmark::DoNotOptimize(ptk::loss_and_grad(cfg, params, tokens));
}
BENCHMARK(BM_LossAndGrad);

void BM_BpeEncode(benchmark::State& state) {
    std::vector<ptk::SourceText> corpus;
    for (std::uint64_t i = 0; i < 20; ++i) corpus.push_back({synthetic_text(400, i), "web"});
    ptk::BpeTrainOptions opt;
    opt.vocab_target = 600;
    const auto tok = ptk::train_bpe(corpus, opt);
    const auto text = synthetic_text(static_cast<std::size_t>(state.range(0)), 99);
    for (auto _ : state) benchmark::DoNotOptimize(tok.encode(text));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_BpeEncode)->Arg(1000)->Arg(10000);

void BM_MinHashSignature(benchmark::State& state) {
    const ptk::MinHasher hasher(128, 7);
    const auto shingles = ptk::word_shingles(synthetic_text(static_cast<std::size_t>(state.range(0)), 5), 5);
    for (auto _ : state) benchmark::DoNotOptimize(hasher.signature(shingles));
}
BENCHMARK(BM_MinHashSignature)->Arg(200)->Arg(2000);

void BM_NearDedup(benchmark::State& state) {
    std::vector<ptk::Document> docs;
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        ptk::Document d;
        d.id = "d" + std::to_string(i);
        d.text = synthetic_text(150, static_cast<std::uint64_t>(i % (state.range(0) / 2)));
        docs.push_back(std::move(d));
    }
    const ptk::NearDedupOptions opt;
    for (auto _ : state) benchmark::DoNotOptimize(ptk::near_dedup(docs, opt));
}
BENCHMARK(BM_NearDedup)->Arg(200)->Arg(1000);

void BM_ThroughputReport(benchmark::State& state) {
    const auto cfg = ptk::ThroughputConfig::reference();
    for (auto _ : state) benchmark::DoNotOptimize(ptk::throughput_report(cfg));
}
BENCHMARK(BM_ThroughputReport);

}  // namespace

BENCHMARK_MAIN();
