// One line per acceptance criterion; exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptk/corpus/blend.hpp"
#include "ptk/corpus/dedup.hpp"
#include "ptk/model/ops.hpp"
#include "ptk/model/transformer.hpp"
#include "ptk/tokenizer/bpe.hpp"
#include "ptk/train/data_parallel.hpp"
#include "ptk/train/schedule.hpp"
#include "ptk/train/throughput.hpp"
#include "ptk/train/toy_trainer.hpp"
#include "ptk/util/hash.hpp"
#include "ptk/util/rng.hpp"

namespace {

using namespace ptk;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

ModelConfig tiny(std::size_t seq) {
    ModelConfig c;
    c.num_layers = 2;
    c.hidden_dim = 8;
    c.num_heads = 2;
    c.num_kv_heads = 1;
    c.head_dim = 4;
    c.ffn_dim = 32;
    c.seq_len = seq;
    c.vocab_size = 11;
    return c;
}

std::vector<TokenId> random_tokens(std::size_t n, std::size_t vocab, Rng& rng) {
    std::vector<TokenId> t(n);
    for (auto& x : t) x = static_cast<TokenId>(rng.below(vocab));
    return t;
}

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng) {
    Tensor<double> t(std::move(shape));
    for (auto& x : t.data()) x = rng.normal();
    return t;
}

// Closed-form projection weight count of one layer (no norms).
double layer_matmul_params(const ModelConfig& c) {
    const double h = double(c.hidden_dim), q = double(c.num_heads * c.head_dim), kv = double(c.kv_dim());
    return h * q + 2 * h * kv + q * h + 2 * h * double(c.ffn_dim);
}

// 1. Parameter counts at the reference size.
Outcome param_counts() {
    Outcome o;
    const auto cfg = ModelConfig::reference_15b();
    o.require(cfg.ffn_dim == 24576, "ffn_dim is not 24576");
    const auto pc = param_count(cfg);
    const double oracle_non_emb =
        double(cfg.num_layers) * (layer_matmul_params(cfg) + 2.0 * double(cfg.hidden_dim)) + double(cfg.hidden_dim);
    o.require(pc.embedding == 3'145'728'000ULL, "embedding " + std::to_string(pc.embedding));
    o.require(pc.embedding == 2ULL * cfg.vocab_size * cfg.hidden_dim, "embedding != 2 * vocab * hidden");
    o.require(double(pc.non_embedding) == oracle_non_emb, "non_embedding disagrees with closed form");
    o.require(std::abs(double(pc.non_embedding) / 12.5e9 - 1.0) < 0.01, "non_embedding not within 1% of 12.5e9");
    o.require(std::abs(double(pc.embedding) / 3.2e9 - 1.0) < 0.02, "embedding not within 2% of 3.2e9");
    o.detail = o.pass ? fmt("embedding %.0f, non_embedding %.0f", double(pc.embedding), double(pc.non_embedding))
                      : o.detail;
    return o;
}

// 2. MFU per ramp stage from batch, device count and iteration time.
Outcome mfu_reproduction() {
    Outcome o;
    const auto cfg = ThroughputConfig::reference();
    const auto report = throughput_report(cfg);
    const auto& m = cfg.model;
    const double fpt = 6.0 * (double(m.num_layers) * layer_matmul_params(m) + double(m.vocab_size * m.hidden_dim)) +
                       12.0 * double(m.num_layers) * double(m.hidden_dim) * double(m.seq_len);
    const double expected[] = {34.3, 33.3, 30.5};
    std::string got;
    o.require(report.rows.size() == 3, "expected 3 ramp stages");
    for (std::size_t i = 0; i < report.rows.size() && i < 3; ++i) {
        const auto& s = cfg.ramp[i];
        const double devices = double(s.data_parallel_size * cfg.hardware.devices_per_replica);
        const double oracle = 100.0 * fpt * double(s.batch_size * m.seq_len) / s.iteration_time /
                              (devices * cfg.hardware.peak_flops_per_device);
        const double v = report.rows[i].mfu_percent;
        o.require(std::abs(v - oracle) < 1e-9, fmt("stage %.0f disagrees with oracle", double(i)));
        o.require(std::abs(v - expected[i]) <= 0.5, fmt("stage %.0f mfu %.2f vs %.1f", double(i), v, expected[i]));
        got += std::string(i ? " / " : "") + fmt("%.1f", v);
    }
    if (o.pass) o.detail = "mfu " + got;
    return o;
}

// 3. Calendar days per stage and for the whole ramp.
Outcome schedule_reproduction() {
    Outcome o;
    const auto cfg = ThroughputConfig::reference();
    const auto report = throughput_report(cfg);
    const double expected[] = {0.8, 0.4, 11.9};
    double total = 0;
    std::string got;
    for (std::size_t i = 0; i < report.rows.size() && i < 3; ++i) {
        const auto& s = cfg.ramp[i];
        const double per_iter = double(s.batch_size * cfg.model.seq_len);
        const double oracle = std::ceil(double(s.tokens) / per_iter) * s.iteration_time / 86400.0;
        const double d = report.rows[i].days;
        o.require(std::abs(d - oracle) < 1e-9, fmt("stage %.0f disagrees with oracle", double(i)));
        o.require(std::abs(d - expected[i]) <= 0.1, fmt("stage %.0f days %.3f vs %.1f", double(i), d, expected[i]));
        total += d;
        got += std::string(i ? " / " : "") + fmt("%.2f", d);
    }
    o.require(std::abs(total - report.total_days) < 1e-9, "total_days is not the sum of stages");
    o.require(total >= 12.8 && total <= 13.5, fmt("total %.2f days outside [12.8, 13.5]", total));
    if (o.pass) o.detail = "days " + got + fmt(", total %.2f", total);
    return o;
}

// Full [seq, seq] score matrix per head, -inf above the diagonal, plain softmax.
Tensor<double> naive_attention(const Tensor<double>& q, const Tensor<double>& k, const Tensor<double>& v, bool causal) {
    const std::size_t s = q.dim(0), H = q.dim(1), G = k.dim(1), d = q.dim(2);
    Tensor<double> out({s, H, d});
    for (std::size_t h = 0; h < H; ++h) {
        const std::size_t g = h / (H / G);
        for (std::size_t i = 0; i < s; ++i) {
            std::vector<double> row(s);
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < s; ++j) {
                double dot = 0;
                for (std::size_t t = 0; t < d; ++t) dot += q[(i * H + h) * d + t] * k[(j * G + g) * d + t];
                row[j] = (causal && j > i) ? -std::numeric_limits<double>::infinity() : dot / std::sqrt(double(d));
                mx = std::max(mx, row[j]);
            }
            double z = 0;
            for (double& x : row) z += (x = std::exp(x - mx));
            for (std::size_t t = 0; t < d; ++t) {
                double acc = 0;
                for (std::size_t j = 0; j < s; ++j) acc += row[j] / z * v[(j * G + g) * d + t];
                out[(i * H + h) * d + t] = acc;
            }
        }
    }
    return out;
}

// Multi-head attention with kv heads copied out to every query head.
Tensor<double> mha(const Tensor<double>& q, const Tensor<double>& k, const Tensor<double>& v) {
    const std::size_t s = q.dim(0), H = q.dim(1), G = k.dim(1), d = q.dim(2);
    Tensor<double> kf({s, H, d}), vf({s, H, d});
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t h = 0; h < H; ++h)
            for (std::size_t t = 0; t < d; ++t) {
                kf[(i * H + h) * d + t] = k[(i * G + h / (H / G)) * d + t];
                vf[(i * H + h) * d + t] = v[(i * G + h / (H / G)) * d + t];
            }
    return naive_attention(q, kf, vf, true);
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// 4. GQA against the brute-force oracle; group size 1 against MHA.
Outcome gqa_correctness() {
    Outcome o;
    Rng rng(4);
    double worst = 0, worst_mha = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t G = 1 + rng.below(3);
        const std::size_t H = G * (1 + rng.below(4));
        const std::size_t d = 2 * (1 + rng.below(4));
        const std::size_t s = 1 + rng.below(12);
        const auto q = random_tensor({s, H, d}, rng);
        const auto k = random_tensor({s, G, d}, rng);
        const auto v = random_tensor({s, G, d}, rng);
        const auto out = gqa_attention(q, k, v, true);
        worst = std::max(worst, max_abs_diff(out, naive_attention(q, k, v, true)));
        worst_mha = std::max(worst_mha, max_abs_diff(out, mha(q, k, v)));
    }
    double worst_g1 = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t H = 1 + rng.below(4), d = 2 * (1 + rng.below(4)), s = 1 + rng.below(12);
        const auto q = random_tensor({s, H, d}, rng);
        const auto k = random_tensor({s, H, d}, rng);
        const auto v = random_tensor({s, H, d}, rng);
        worst_g1 = std::max(worst_g1, max_abs_diff(gqa_attention(q, k, v, true), mha(q, k, v)));
    }
    o.require(worst < 1e-6, fmt("max diff vs oracle %.3g", worst));
    o.require(worst_mha < 1e-6, fmt("max diff vs replicated-kv MHA %.3g", worst_mha));
    o.require(worst_g1 < 1e-6, fmt("group size 1 vs MHA %.3g", worst_g1));
    if (o.pass) o.detail = fmt("max diff %.2g (oracle), %.2g (group size 1 vs MHA)", worst, worst_g1);
    return o;
}

// 5. RoPE norm preservation and relative-position invariance.
Outcome rope_properties() {
    Outcome o;
    Rng rng(11);
    double norm_err = 0, rel_err = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 2 * (1 + rng.below(32));
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        const auto r = rope_rotate<double>(v, rng.below(5000), 10000.0);
        double n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < d; ++i) n0 += v[i] * v[i], n1 += r[i] * r[i];
        norm_err = std::max(norm_err, std::abs(std::sqrt(n1) - std::sqrt(n0)));
    }
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 2 * (1 + rng.below(16));
        std::vector<double> q(d), k(d);
        for (auto& x : q) x = rng.normal();
        for (auto& x : k) x = rng.normal();
        auto score = [&](std::size_t m, std::size_t n) {
            const auto a = rope_rotate<double>(q, m, 10000.0);
            const auto b = rope_rotate<double>(k, n, 10000.0);
            double s = 0;
            for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
            return s;
        };
        for (std::size_t m = 0; m <= 16; ++m)
            for (std::size_t n = 0; n <= 16; ++n)
                for (std::size_t delta = 1; m + delta <= 16 && n + delta <= 16; ++delta)
                    rel_err = std::max(rel_err, std::abs(score(m, n) - score(m + delta, n + delta)));
    }
    o.require(norm_err < 1e-9, fmt("norm error %.3g", norm_err));
    o.require(rel_err < 1e-6, fmt("relative-position error %.3g", rel_err));
    if (o.pass) o.detail = fmt("norm err %.2g, relative err %.2g", norm_err, rel_err);
    return o;
}

// 6. Central finite differences on every parameter, double precision.
Outcome gradient_check() {
    Outcome o;
    const auto cfg = tiny(8);
    Rng rng(7);
    auto params = init_params<double>(cfg, rng, 0.3);
    auto perturb = [&](Tensor<double>& g) {
        for (auto& x : g.data()) x = 1.0 + 0.2 * rng.normal();
    };
    for (auto& L : params.layers) perturb(L.attn_norm), perturb(L.mlp_norm);
    perturb(params.final_norm);
    const auto tokens = random_tokens(8, cfg.vocab_size, rng);

    const auto analytic = loss_and_grad<double>(cfg, params, tokens).grad.flatten();
    auto flat = params.flatten();
    const double h = 1e-4;
    double worst = 0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double orig = flat[i];
        flat[i] = orig + h;
        params.unflatten(flat);
        const double up = sequence_loss<double>(cfg, params, tokens);
        flat[i] = orig - h;
        params.unflatten(flat);
        const double down = sequence_loss<double>(cfg, params, tokens);
        flat[i] = orig;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), 1e-6}));
    }
    o.require(analytic.size() == flat.size(), "gradient size mismatch");
    o.require(worst < 1e-4, fmt("max relative error %.3g", worst));
    if (o.pass) o.detail = fmt("%.0f parameters, max relative error %.2g", double(flat.size()), worst);
    return o;
}

// 7. Overfitting plus the continued-phase blend switch and lr decay.
Outcome toy_training() {
    Outcome o;
    ModelConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_dim = 32;
    cfg.num_heads = 4;
    cfg.num_kv_heads = 2;
    cfg.head_dim = 8;
    cfg.ffn_dim = 128;
    cfg.seq_len = 16;
    cfg.vocab_size = 16;
    Rng rng(1);
    std::vector<Sequence> corpus;
    for (int i = 0; i < 32; ++i) corpus.push_back(random_tokens(cfg.seq_len, cfg.vocab_size, rng));
    SerialTrainer<double> trainer(cfg, init_params<double>(cfg, rng));
    for (int step = 0; step < 200; ++step) trainer.step(corpus, 1e-2);
    const double final_loss = mean_loss_and_grad<double>(cfg, trainer.params(), corpus).first;
    o.require(final_loss < 0.1, fmt("final loss %.4f", final_loss));

    TrainPlan plan;
    plan.ramp = {{1, 4, 640, 1.0}, {2, 8, 1280, 1.0}};
    plan.pretrain_blend = BlendSpec({{"nl", 0.5, {{"a", 1.0}}}, {"code", 0.5, {{"b", 1.0}}}});
    plan.continued = make_continued_phase(plan.pretrain_blend, 1920, 1600, 0.5, {{"a", 9.0}}, {}, "align", 0.5);
    plan.lr.warmup_steps = 4;
    plan.lr.peak_lr = 1e-2;
    plan.lr.min_lr = 1e-3;
    plan.derive_steps(tiny(8));
    plan.validate();

    std::vector<Window> windows;
    for (int i = 0; i < 9; ++i)
        windows.push_back({random_tokens(8, 11, rng), i % 3 == 0 ? "a" : i % 3 == 1 ? "b" : "align"});
    ToyTrainOptions opt{tiny(8), plan, 3, {}, 0.02};
    const auto result = train_toy<double>(opt, windows);
    auto frac = [&](Phase p, const std::string& leaf) {
        if (!result.draws.count(p)) return -1.0;
        double n = 0, hit = 0;
        for (const auto& [l, c] : result.draws.at(p)) n += double(c), hit += l == leaf ? double(c) : 0.0;
        return n > 0 ? hit / n : -1.0;
    };
    const double pre_a = frac(Phase::pretrain, "a"), q_a = frac(Phase::continued_quality, "a");
    const double pre_align = frac(Phase::pretrain, "align"), c_align = frac(Phase::continued_alignment, "align");
    o.require(pre_align == 0.0, "pre-training sampled the alignment leaf");
    o.require(q_a > pre_a + 0.2, fmt("quality phase leaf share %.2f vs pre-training %.2f", q_a, pre_a));
    o.require(c_align > 0.3, fmt("alignment share %.2f after switch", c_align));

    const auto& s = plan.lr;
    const double before = lr_at(s, s.decay_steps) - lr_at(s, s.decay_steps - 1);
    const double after = lr_at(s, s.decay_steps + 1) - lr_at(s, s.decay_steps);
    o.require(after < 0 && std::abs(after) > std::abs(before),
              fmt("lr slope before %.3g, after switch %.3g", before, after));
    if (o.pass)
        o.detail = fmt("loss %.4f; leaf share %.2f -> %.2f", final_loss, pre_a, q_a) +
                   fmt("; lr slope %.2g -> %.2g", before, after);
    return o;
}

// 8. Sharded-optimizer data parallelism against serial training.
Outcome data_parallel() {
    Outcome o;
    const auto cfg = tiny(8);
    std::string detail;
    for (std::size_t k : {2u, 4u}) {
        Rng rng(3);
        const auto init = init_params<double>(cfg, rng);
        SerialTrainer<double> serial(cfg, init);
        DataParallelGroup<double> group(cfg, init, k);
        Rng data(4);
        for (int step = 0; step < 10; ++step) {
            std::vector<Sequence> batch;
            for (int i = 0; i < 8; ++i) batch.push_back(random_tokens(cfg.seq_len, cfg.vocab_size, data));
            serial.step(batch, 5e-3);
            group.step(batch, 5e-3);
        }
        const auto a = serial.params().flatten();
        double worst = 0;
        for (std::size_t r = 0; r < k; ++r) {
            const auto b = group.replica(r).flatten();
            for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
        }
        o.require(worst < 1e-10, fmt("k=%.0f max diff %.3g", double(k), worst));
        detail += std::string(detail.empty() ? "" : ", ") + fmt("k=%.0f max diff %.2g", double(k), worst);
    }
    if (o.pass) o.detail = detail;
    return o;
}

std::string append_utf8(std::string s, std::uint32_t cp) {
    if (cp < 0x80) {
        s += char(cp);
    } else if (cp < 0x800) {
        s += char(0xC0 | (cp >> 6));
        s += char(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        s += char(0xE0 | (cp >> 12));
        s += char(0x80 | ((cp >> 6) & 0x3F));
        s += char(0x80 | (cp & 0x3F));
    } else {
        s += char(0xF0 | (cp >> 18));
        s += char(0x80 | ((cp >> 12) & 0x3F));
        s += char(0x80 | ((cp >> 6) & 0x3F));
        s += char(0x80 | (cp & 0x3F));
    }
    return s;
}

std::string random_unicode(Rng& rng, std::size_t max_len) {
    std::string s;
    const std::size_t n = rng.below(max_len + 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t cp;
        switch (rng.below(5)) {
            case 0: cp = 0x20 + std::uint32_t(rng.below(0x5F)); break;
            case 1: cp = std::uint32_t(rng.below(0x20)); break;
            case 2: cp = 0x80 + std::uint32_t(rng.below(0x780)); break;
            case 3: cp = 0x800 + std::uint32_t(rng.below(0xF800)); break;
            default: cp = 0x10000 + std::uint32_t(rng.below(0x100000)); break;
        }
        if (cp >= 0xD800 && cp <= 0xDFFF) cp = 'x';
        s = append_utf8(std::move(s), cp);
    }
    return s;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// 9. Tokenizer round trip, digit atomicity and byte fallback.
Outcome tokenizer() {
    Outcome o;
    const std::vector<SourceText> corpus = {
        {"the cat sat on the mat and the cat ate the rat 1234 times in 2024 and 2025", "en"},
        {"  hello  world 42\n  hello again, world 9001\n", "en"},
        {"def add(a, b):\n    return a + b\n\ndef sub(a, b):\n    return a - b  # 10 20 30\n", "code"},
        {"der Hund und die Katze und der Hund schlafen 2024", "de"},
        {"naïve café résumé façade naïve café 1999 1999", "fr"},
    };
    const auto model = train_bpe(corpus, {420, {}});
    Rng rng(2);
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_unicode(rng, 40);
        if (model.decode(model.encode(s)) != s) ++failures;
    }
    o.require(failures == 0, std::to_string(failures) + " fuzz round-trip failures");

    std::size_t digits = 0, single = 0;
    std::string digit_text = "year 2024 had 1234567890 days, 3.14159 and 42";
    for (int i = 0; i < 200; ++i) digit_text += " " + std::to_string(rng.below(1'000'000'000));
    for (const auto& src : corpus) digit_text += src.text;
    for (TokenId id : model.encode(digit_text)) {
        const auto& t = model.token_bytes(id);
        const auto n = std::count_if(t.begin(), t.end(), is_digit);
        digits += std::size_t(n);
        if (n > 0 && t.size() == 1) ++single;
    }
    for (TokenId id = TokenizerModel::kBaseVocab; id < model.size(); ++id) {
        const auto& t = model.token_bytes(id);
        o.require(!std::any_of(t.begin(), t.end(), is_digit), "learned token contains a digit: " + t);
    }
    o.require(digits > 0 && single == digits, fmt("%.0f of %.0f digits single-character", double(single), double(digits)));

    const std::string unseen = "漢字🙂ѬΩ\x7f";
    const auto ids = model.encode(unseen);
    bool fallback = ids.size() == unseen.size();
    for (std::size_t i = 0; fallback && i < ids.size(); ++i)
        fallback = ids[i] == TokenizerModel::byte_token(static_cast<unsigned char>(unseen[i]));
    o.require(fallback && model.decode(ids) == unseen, "byte fallback failed on unseen characters");
    if (o.pass) o.detail = fmt("1000/1000 round trips, %.0f/%.0f digits single-character, fallback ok", double(single), double(digits));
    return o;
}

// Cluster labels from pairs with exact Jaccard >= thr.
std::vector<std::size_t> brute_force_labels(const std::vector<std::vector<std::uint64_t>>& sh, double thr) {
    UnionFind uf(sh.size());
    for (std::size_t i = 0; i < sh.size(); ++i)
        for (std::size_t j = i + 1; j < sh.size(); ++j)
            if (jaccard(sh[i], sh[j]) >= thr) uf.unite(i, j);
    std::vector<std::size_t> label(sh.size());
    for (std::size_t i = 0; i < sh.size(); ++i) label[i] = uf.find(i);
    return label;
}

// Every cluster of `fine` lies inside one cluster of `coarse`.
bool refines(const std::vector<std::size_t>& fine, const std::vector<std::size_t>& coarse) {
    std::map<std::size_t, std::size_t> image;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        auto [it, fresh] = image.emplace(fine[i], coarse[i]);
        if (!fresh && it->second != coarse[i]) return false;
    }
    return true;
}

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
            docs.push_back({"f" + std::to_string(family) + "m" + std::to_string(m), text, "web", "english"});
        }
        ++family;
    }
    return docs;
}

// 10. Near-dedup agreement and the MinHash estimator.
Outcome dedup() {
    Outcome o;
    std::size_t pairs_in = 0, clustered = 0;
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
        for (std::size_t i = 0; i < docs.size(); ++i) got[i] = docs.size() + i;
        for (std::size_t c = 0; c < report.near_clusters.size(); ++c)
            for (const auto& id : report.near_clusters[c]) got[index.at(id)] = c, ++clustered;
        const auto strict = brute_force_labels(sh, opt.threshold + 0.1);
        const auto loose = brute_force_labels(sh, opt.threshold - 0.1);
        o.require(refines(strict, got), fmt("seed %.0f: a pair with J >= 0.9 was not clustered", double(seed)));
        o.require(refines(got, loose), fmt("seed %.0f: clustered a pair below J 0.7", double(seed)));
        for (std::size_t i = 0; i < sh.size(); ++i)
            for (std::size_t j = i + 1; j < sh.size(); ++j)
                if (jaccard(sh[i], sh[j]) >= opt.threshold + 0.1) ++pairs_in;
    }
    o.require(pairs_in > 0 && clustered > 0, "corpus produced no near-duplicate pairs");

    std::vector<std::uint64_t> a, b;
    for (std::uint64_t i = 0; i < 150; ++i) a.push_back(mix64(i));
    for (std::uint64_t i = 50; i < 200; ++i) b.push_back(mix64(i));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const MinHasher mh(128, 0);
    const double est = MinHasher::estimate(mh.signature(a), mh.signature(b));
    o.require(jaccard(a, b) == 0.5, "constructed pair is not Jaccard 0.5");
    o.require(std::abs(est - 0.5) <= 0.10, fmt("MinHash estimate %.3f", est));
    if (o.pass) o.detail = fmt("3 corpora of 200 docs agree; %.0f high-similarity pairs; estimate %.3f", double(pairs_in), est);
    return o;
}

// 11. Category proportions of 100,000 draws.
Outcome blend_sampling() {
    Outcome o;
    const auto draws = sample_stream(reference_top_level_blend(), 0, 100000);
    std::map<std::string, double> p;
    for (const auto& d : draws) p[d] += 1.0 / double(draws.size());
    const std::map<std::string, double> target{{"english", 0.70}, {"multilingual", 0.15}, {"code", 0.15}};
    for (const auto& [k, w] : target) o.require(std::abs(p[k] - w) <= 0.01, k + fmt(" %.4f", p[k]));
    o.require(p.size() == 3, "unexpected category drawn");
    if (o.pass) o.detail = fmt("english %.4f, multilingual %.4f, code %.4f", p["english"], p["multilingual"], p["code"]);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double max_seconds;  // 0 = no limit
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "parameter counts", 1.0, param_counts},
        {2, "mfu reproduction", 1.0, mfu_reproduction},
        {3, "schedule reproduction", 1.0, schedule_reproduction},
        {4, "gqa correctness", 0, gqa_correctness},
        {5, "rope properties", 0, rope_properties},
        {6, "gradient check", 60.0, gradient_check},
        {7, "toy training", 0, toy_training},
        {8, "data-parallel equivalence", 0, data_parallel},
        {9, "tokenizer", 0, tokenizer},
        {10, "dedup", 0, dedup},
        {11, "blend sampling", 0, blend_sampling},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.max_seconds > 0 && secs >= c.max_seconds) {
            o.pass = false;
            o.detail += fmt(" (runtime %.2f s exceeds %.0f s)", secs, c.max_seconds);
        }
        std::printf("[%s] %2d %-26s %7.3f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed;
}
