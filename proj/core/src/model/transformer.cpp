#include "ptk/model/transformer.hpp"

#include <algorithm>
#include <cmath>

#include "ptk/model/ops.hpp"
#include "ptk/util/errors.hpp"

namespace ptk {

template <class Real>
Params<Real> Params<Real>::zeros(const ModelConfig& c) {
    c.validate();
    const std::size_t h = c.hidden_dim;
    Params p;
    p.embedding = Tensor<Real>({c.vocab_size, h});
    p.layers.resize(c.num_layers);
    for (auto& L : p.layers) {
        L.attn_norm = Tensor<Real>({h});
        L.wq = Tensor<Real>({h, h});
        L.wk = Tensor<Real>({h, c.kv_dim()});
        L.wv = Tensor<Real>({h, c.kv_dim()});
        L.wo = Tensor<Real>({h, h});
        L.mlp_norm = Tensor<Real>({h});
        L.w_up = Tensor<Real>({h, c.ffn_dim});
        L.w_down = Tensor<Real>({c.ffn_dim, h});
    }
    p.final_norm = Tensor<Real>({h});
    p.lm_head = Tensor<Real>({h, c.vocab_size});
    return p;
}

template <class Real>
std::size_t Params<Real>::size() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Tensor<Real>& t) { n += t.size(); });
    return n;
}

template <class Real>
std::vector<Real> Params<Real>::flatten() const {
    std::vector<Real> flat;
    flat.reserve(size());
    visit([&](const std::string&, const Tensor<Real>& t) { flat.insert(flat.end(), t.data().begin(), t.data().end()); });
    return flat;
}

template <class Real>
void Params<Real>::unflatten(std::span<const Real> flat) {
    if (flat.size() != size()) throw DimensionError("Params::unflatten: size mismatch");
    std::size_t off = 0;
    visit([&](const std::string&, Tensor<Real>& t) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t.size(), t.data().begin());
        off += t.size();
    });
}

template <class Real>
template <class Other>
Params<Other> Params<Real>::cast() const {
    Params<Other> out;
    auto conv = [](const Tensor<Real>& t) {
        std::vector<Other> d(t.data().begin(), t.data().end());
        return Tensor<Other>(t.shape(), std::move(d));
    };
    out.embedding = conv(embedding);
    out.layers.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& s = layers[l];
        auto& d = out.layers[l];
        d.attn_norm = conv(s.attn_norm);
        d.wq = conv(s.wq);
        d.wk = conv(s.wk);
        d.wv = conv(s.wv);
        d.wo = conv(s.wo);
        d.mlp_norm = conv(s.mlp_norm);
        d.w_up = conv(s.w_up);
        d.w_down = conv(s.w_down);
    }
    out.final_norm = conv(final_norm);
    out.lm_head = conv(lm_head);
    return out;
}

template <class Real>
Params<Real> init_params(const ModelConfig& c, Rng& rng, double stddev) {
    Params<Real> p = Params<Real>::zeros(c);
    const double out_std = stddev / std::sqrt(2.0 * static_cast<double>(std::max<std::size_t>(c.num_layers, 1)));
    auto normal_fill = [&](Tensor<Real>& t, double sd) {
        for (auto& x : t.data()) x = static_cast<Real>(rng.normal(0.0, sd));
    };
    normal_fill(p.embedding, stddev);
    for (auto& L : p.layers) {
        L.attn_norm.fill(Real(1));
        normal_fill(L.wq, stddev);
        normal_fill(L.wk, stddev);
        normal_fill(L.wv, stddev);
        normal_fill(L.wo, out_std);
        L.mlp_norm.fill(Real(1));
        normal_fill(L.w_up, stddev);
        normal_fill(L.w_down, out_std);
    }
    p.final_norm.fill(Real(1));
    normal_fill(p.lm_head, stddev);
    return p;
}

namespace {

// y[n, out] = a[n, in] * w[in, out]
template <class Real>
std::vector<Real> matmul(const std::vector<Real>& a, std::size_t n, std::size_t in, const Tensor<Real>& w,
                         FlopCounter* flops) {
    const std::size_t out = w.dim(1);
    std::vector<Real> y(n * out, Real(0));
    for (std::size_t i = 0; i < n; ++i) {
        Real* yi = &y[i * out];
        for (std::size_t k = 0; k < in; ++k) {
            const Real aik = a[i * in + k];
            const Real* wk = &w[k * out];
            for (std::size_t o = 0; o < out; ++o) yi[o] += aik * wk[o];
        }
    }
    if (flops) flops->add_matmul(n, in, out);
    return y;
}

// da[n, in] += dy * w^T; dw[in, out] += a^T * dy
template <class Real>
void matmul_backward(const std::vector<Real>& a, std::size_t n, std::size_t in, const Tensor<Real>& w,
                     const std::vector<Real>& dy, std::vector<Real>& da, Tensor<Real>& dw) {
    const std::size_t out = w.dim(1);
    da.assign(n * in, Real(0));
    for (std::size_t i = 0; i < n; ++i) {
        const Real* dyi = &dy[i * out];
        for (std::size_t k = 0; k < in; ++k) {
            const Real* wk = &w[k * out];
            Real* dwk = &dw[k * out];
            const Real aik = a[i * in + k];
            Real s = 0;
            for (std::size_t o = 0; o < out; ++o) {
                s += dyi[o] * wk[o];
                dwk[o] += aik * dyi[o];
            }
            da[i * in + k] = s;
        }
    }
}

template <class Real>
void rmsnorm(const std::vector<Real>& x, std::size_t n, std::size_t h, const Tensor<Real>& gain,
             std::vector<Real>& y, std::vector<Real>& inv_rms) {
    y.resize(n * h);
    inv_rms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Real ms = 0;
        for (std::size_t t = 0; t < h; ++t) ms += x[i * h + t] * x[i * h + t];
        ms /= static_cast<Real>(h);
        const Real r = Real(1) / std::sqrt(ms + static_cast<Real>(kRmsNormEps));
        inv_rms[i] = r;
        for (std::size_t t = 0; t < h; ++t) y[i * h + t] = gain[t] * x[i * h + t] * r;
    }
}

// dx = r * g * dy - r^3 * x * sum(g * dy * x) / h
template <class Real>
void rmsnorm_backward(const std::vector<Real>& x, std::size_t n, std::size_t h, const Tensor<Real>& gain,
                      const std::vector<Real>& inv_rms, const std::vector<Real>& dy, std::vector<Real>& dx,
                      Tensor<Real>& dgain) {
    dx.assign(n * h, Real(0));
    for (std::size_t i = 0; i < n; ++i) {
        const Real r = inv_rms[i];
        Real dot = 0;
        for (std::size_t t = 0; t < h; ++t) {
            const Real xv = x[i * h + t];
            const Real g = dy[i * h + t];
            dgain[t] += g * xv * r;
            dot += gain[t] * g * xv;
        }
        const Real coef = r * r * r * dot / static_cast<Real>(h);
        for (std::size_t t = 0; t < h; ++t) dx[i * h + t] = r * gain[t] * dy[i * h + t] - coef * x[i * h + t];
    }
}

template <class Real>
void apply_rope(std::vector<Real>& x, std::size_t n, std::size_t heads, std::size_t d, double base, int sign) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t hh = 0; hh < heads; ++hh)
            rope_rotate_inplace<Real>(std::span<Real>(&x[(i * heads + hh) * d], d), i, base, sign);
}

template <class Real>
struct LayerCache {
    std::vector<Real> x_in, a, inv_rms1, q, k, v, attn_out, probs;
    std::vector<Real> x_mid, b, inv_rms2, up, act;
};

template <class Real>
struct ForwardCache {
    std::vector<LayerCache<Real>> layers;
    std::vector<Real> x_final, xf, inv_rms_f;
};

template <class Real>
void check_tokens(const ModelConfig& c, std::span<const TokenId> tokens) {
    if (tokens.size() > c.seq_len) throw InputError("sequence longer than seq_len");
    for (TokenId t : tokens)
        if (t >= c.vocab_size) throw InputError("token id " + std::to_string(t) + " out of range");
}

template <class Real>
Tensor<Real> forward_impl(const ModelConfig& c, const Params<Real>& p, std::span<const TokenId> tokens,
                          FlopCounter* flops, ForwardCache<Real>* cache) {
    check_tokens<Real>(c, tokens);
    const std::size_t n = tokens.size();
    const std::size_t h = c.hidden_dim;
    const std::size_t hd = c.head_dim;

    std::vector<Real> x(n * h);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = p.embedding.row(tokens[i]);
        std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(i * h));
    }
    if (cache) cache->layers.resize(c.num_layers);

    for (std::size_t l = 0; l < c.num_layers; ++l) {
        const auto& L = p.layers[l];
        LayerCache<Real> lc;
        lc.x_in = x;
        rmsnorm(x, n, h, L.attn_norm, lc.a, lc.inv_rms1);
        lc.q = matmul(lc.a, n, h, L.wq, flops);
        lc.k = matmul(lc.a, n, h, L.wk, flops);
        lc.v = matmul(lc.a, n, h, L.wv, flops);
        apply_rope(lc.q, n, c.num_heads, hd, c.rope_base, 1);
        apply_rope(lc.k, n, c.num_kv_heads, hd, c.rope_base, 1);

        Tensor<Real> qt({n, c.num_heads, hd}, lc.q);
        Tensor<Real> kt({n, c.num_kv_heads, hd}, lc.k);
        Tensor<Real> vt({n, c.num_kv_heads, hd}, lc.v);
        Tensor<Real> att = gqa_attention(qt, kt, vt, true, cache ? &lc.probs : nullptr);
        if (flops) {
            // q k^T and p v per head, counted dense.
            flops->add_matmul(c.num_heads * n, hd, n);
            flops->add_matmul(c.num_heads * n, n, hd);
        }
        lc.attn_out = att.storage();
        std::vector<Real> o = matmul(lc.attn_out, n, h, L.wo, flops);
        for (std::size_t i = 0; i < n * h; ++i) x[i] += o[i];

        lc.x_mid = x;
        rmsnorm(x, n, h, L.mlp_norm, lc.b, lc.inv_rms2);
        lc.up = matmul(lc.b, n, h, L.w_up, flops);
        lc.act.resize(lc.up.size());
        for (std::size_t i = 0; i < lc.up.size(); ++i) lc.act[i] = squared_relu(lc.up[i]);
        std::vector<Real> down = matmul(lc.act, n, c.ffn_dim, L.w_down, flops);
        for (std::size_t i = 0; i < n * h; ++i) x[i] += down[i];

        if (cache) cache->layers[l] = std::move(lc);
    }

    std::vector<Real> xf, inv_rms_f;
    rmsnorm(x, n, h, p.final_norm, xf, inv_rms_f);
    std::vector<Real> logits = matmul(xf, n, h, p.lm_head, flops);
    if (cache) {
        cache->x_final = std::move(x);
        cache->xf = std::move(xf);
        cache->inv_rms_f = std::move(inv_rms_f);
    }
    return Tensor<Real>({n, c.vocab_size}, std::move(logits));
}

// Mean next-token cross-entropy; fills d_logits when requested.
template <class Real>
Real cross_entropy(const Tensor<Real>& logits, std::span<const TokenId> tokens, std::vector<Real>* d_logits) {
    const std::size_t n = tokens.size();
    const std::size_t V = logits.dim(1);
    const std::size_t count = n - 1;
    if (d_logits) d_logits->assign(n * V, Real(0));
    Real total = 0;
    std::vector<Real> row(V);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        auto src = logits.row(i);
        std::copy(src.begin(), src.end(), row.begin());
        softmax_inplace<Real>(row);
        const TokenId target = tokens[i + 1];
        // log-sum-exp form for the loss avoids log(0) on confident rows.
        const Real mx = *std::max_element(src.begin(), src.end());
        Real se = 0;
        for (Real z : src) se += std::exp(z - mx);
        total += (std::log(se) + mx) - src[target];
        if (d_logits) {
            Real* d = &(*d_logits)[i * V];
            for (std::size_t t = 0; t < V; ++t) d[t] = row[t] / static_cast<Real>(count);
            d[target] -= Real(1) / static_cast<Real>(count);
        }
    }
    return total / static_cast<Real>(count);
}

}  // namespace

template <class Real>
Tensor<Real> transformer_forward(const ModelConfig& c, const Params<Real>& p, std::span<const TokenId> tokens,
                                 FlopCounter* flops) {
    return forward_impl<Real>(c, p, tokens, flops, nullptr);
}

template <class Real>
Real sequence_loss(const ModelConfig& c, const Params<Real>& p, std::span<const TokenId> tokens) {
    if (tokens.size() < 2) throw InputError("loss needs at least 2 tokens");
    Tensor<Real> logits = forward_impl<Real>(c, p, tokens, nullptr, nullptr);
    return cross_entropy<Real>(logits, tokens, nullptr);
}

template <class Real>
LossAndGrad<Real> loss_and_grad(const ModelConfig& c, const Params<Real>& p, std::span<const TokenId> tokens) {
    if (tokens.size() < 2) throw InputError("loss needs at least 2 tokens");
    ForwardCache<Real> cache;
    Tensor<Real> logits = forward_impl<Real>(c, p, tokens, nullptr, &cache);

    const std::size_t n = tokens.size();
    const std::size_t h = c.hidden_dim;
    const std::size_t hd = c.head_dim;

    LossAndGrad<Real> out;
    out.grad = Params<Real>::zeros(c);
    auto& g = out.grad;

    std::vector<Real> d_logits;
    out.loss = cross_entropy<Real>(logits, tokens, &d_logits);

    std::vector<Real> d_xf, dx;
    matmul_backward(cache.xf, n, h, p.lm_head, d_logits, d_xf, g.lm_head);
    rmsnorm_backward(cache.x_final, n, h, p.final_norm, cache.inv_rms_f, d_xf, dx, g.final_norm);

    for (std::size_t l = c.num_layers; l-- > 0;) {
        const auto& L = p.layers[l];
        auto& G = g.layers[l];
        const auto& lc = cache.layers[l];

        // MLP branch: x = x_mid + down(sq(up(norm(x_mid))))
        std::vector<Real> d_act, d_b, d_xmid;
        matmul_backward(lc.act, n, c.ffn_dim, L.w_down, dx, d_act, G.w_down);
        for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] *= squared_relu_grad(lc.up[i]);
        matmul_backward(lc.b, n, h, L.w_up, d_act, d_b, G.w_up);
        rmsnorm_backward(lc.x_mid, n, h, L.mlp_norm, lc.inv_rms2, d_b, d_xmid, G.mlp_norm);
        for (std::size_t i = 0; i < n * h; ++i) d_xmid[i] += dx[i];

        // Attention branch: x_mid = x_in + wo(attn(rope(q), rope(k), v))
        std::vector<Real> d_att;
        matmul_backward(lc.attn_out, n, h, L.wo, d_xmid, d_att, G.wo);

        Tensor<Real> qt({n, c.num_heads, hd}, lc.q);
        Tensor<Real> kt({n, c.num_kv_heads, hd}, lc.k);
        Tensor<Real> vt({n, c.num_kv_heads, hd}, lc.v);
        Tensor<Real> d_out({n, c.num_heads, hd}, std::move(d_att));
        Tensor<Real> dq, dk, dv;
        gqa_attention_backward(qt, kt, vt, lc.probs, d_out, dq, dk, dv);

        apply_rope(dq.storage(), n, c.num_heads, hd, c.rope_base, -1);
        apply_rope(dk.storage(), n, c.num_kv_heads, hd, c.rope_base, -1);

        std::vector<Real> d_a, d_a_k, d_a_v;
        matmul_backward(lc.a, n, h, L.wq, dq.storage(), d_a, G.wq);
        matmul_backward(lc.a, n, h, L.wk, dk.storage(), d_a_k, G.wk);
        matmul_backward(lc.a, n, h, L.wv, dv.storage(), d_a_v, G.wv);
        for (std::size_t i = 0; i < d_a.size(); ++i) d_a[i] += d_a_k[i] + d_a_v[i];

        std::vector<Real> d_xin;
        rmsnorm_backward(lc.x_in, n, h, L.attn_norm, lc.inv_rms1, d_a, d_xin, G.attn_norm);
        for (std::size_t i = 0; i < n * h; ++i) d_xin[i] += d_xmid[i];
        dx = std::move(d_xin);
    }

    for (std::size_t i = 0; i < n; ++i) {
        auto row = g.embedding.row(tokens[i]);
        for (std::size_t t = 0; t < h; ++t) row[t] += dx[i * h + t];
    }
    return out;
}

#define PTK_INSTANTIATE_MODEL(Real)                                                                        \
    template struct Params<Real>;                                                                         \
    template Params<Real> init_params<Real>(const ModelConfig&, Rng&, double);                            \
    template Tensor<Real> transformer_forward<Real>(const ModelConfig&, const Params<Real>&,              \
                                                    std::span<const TokenId>, FlopCounter*);              \
    template LossAndGrad<Real> loss_and_grad<Real>(const ModelConfig&, const Params<Real>&,              \
                                                   std::span<const TokenId>);                             \
    template Real sequence_loss<Real>(const ModelConfig&, const Params<Real>&, std::span<const TokenId>);

PTK_INSTANTIATE_MODEL(float)
PTK_INSTANTIATE_MODEL(double)

template Params<double> Params<float>::cast<double>() const;
template Params<float> Params<double>::cast<float>() const;
template Params<float> Params<float>::cast<float>() const;
template Params<double> Params<double>::cast<double>() const;

}  // namespace ptk
