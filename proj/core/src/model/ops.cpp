#include "ptk/model/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ptk {

template <class Real>
std::vector<Real> squared_relu(std::span<const Real> x) {
    std::vector<Real> y(x.size());
    std::transform(x.begin(), x.end(), y.begin(), [](Real v) { return squared_relu(v); });
    return y;
}

template <class Real>
void rope_rotate_inplace(std::span<Real> vec, std::size_t position, double base, int sign) {
    const std::size_t d = vec.size();
    if (d % 2 != 0) throw ConfigError("rope_rotate: head_dim must be even");
    if (position == 0) return;
    for (std::size_t i = 0; i < d / 2; ++i) {
        const double freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(d));
        const double angle = static_cast<double>(position) * freq;
        const Real c = static_cast<Real>(std::cos(angle));
        const Real s = static_cast<Real>(sign * std::sin(angle));
        const Real x0 = vec[2 * i];
        const Real x1 = vec[2 * i + 1];
        vec[2 * i] = x0 * c - x1 * s;
        vec[2 * i + 1] = x0 * s + x1 * c;
    }
}

template <class Real>
std::vector<Real> rope_rotate(std::span<const Real> vec, std::size_t position, double base) {
    std::vector<Real> out(vec.begin(), vec.end());
    rope_rotate_inplace<Real>(out, position, base, 1);
    return out;
}

template <class Real>
void softmax_inplace(std::span<Real> row) {
    if (row.empty()) return;
    const Real mx = *std::max_element(row.begin(), row.end());
    Real sum = 0;
    for (Real& x : row) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (Real& x : row) x /= sum;
}

namespace {

template <class Real>
void check_attention_shapes(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v) {
    if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3)
        throw DimensionError("gqa_attention: expected rank-3 tensors [seq, heads, head_dim]");
    if (k.shape() != v.shape()) throw DimensionError("gqa_attention: k and v shapes differ");
    if (q.dim(0) != k.dim(0)) throw DimensionError("gqa_attention: sequence lengths differ");
    if (q.dim(2) != k.dim(2)) throw DimensionError("gqa_attention: head_dim differs");
    if (k.dim(1) == 0 || q.dim(1) % k.dim(1) != 0)
        throw DimensionError("gqa_attention: num_heads must be a multiple of num_kv_heads");
}

template <class Real>
inline Real dot(const Real* a, const Real* b, std::size_t n) {
    Real s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

template <class Real>
Tensor<Real> gqa_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                           bool causal, std::vector<Real>* probs) {
    check_attention_shapes(q, k, v);
    const std::size_t seq = q.dim(0);
    const std::size_t heads = q.dim(1);
    const std::size_t kv_heads = k.dim(1);
    const std::size_t d = q.dim(2);
    const std::size_t group = heads / kv_heads;
    const Real scale = Real(1) / std::sqrt(static_cast<Real>(d));

    Tensor<Real> out({seq, heads, d});
    if (probs) probs->assign(heads * seq * seq, Real(0));
    std::vector<Real> scores(seq);

    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t kvh = h / group;
        for (std::size_t i = 0; i < seq; ++i) {
            const std::size_t span_len = causal ? i + 1 : seq;
            const Real* qi = &q[(i * heads + h) * d];
            for (std::size_t j = 0; j < span_len; ++j)
                scores[j] = dot(qi, &k[(j * kv_heads + kvh) * d], d) * scale;
            softmax_inplace(std::span<Real>(scores.data(), span_len));

            Real* oi = &out[(i * heads + h) * d];
            for (std::size_t j = 0; j < span_len; ++j) {
                const Real p = scores[j];
                const Real* vj = &v[(j * kv_heads + kvh) * d];
                for (std::size_t t = 0; t < d; ++t) oi[t] += p * vj[t];
            }
            if (probs) std::copy_n(scores.begin(), span_len, probs->begin() + (h * seq + i) * seq);
        }
    }
    return out;
}

template <class Real>
void gqa_attention_backward(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                            const std::vector<Real>& probs, const Tensor<Real>& d_out,
                            Tensor<Real>& d_q, Tensor<Real>& d_k, Tensor<Real>& d_v) {
    check_attention_shapes(q, k, v);
    const std::size_t seq = q.dim(0);
    const std::size_t heads = q.dim(1);
    const std::size_t kv_heads = k.dim(1);
    const std::size_t d = q.dim(2);
    const std::size_t group = heads / kv_heads;
    const Real scale = Real(1) / std::sqrt(static_cast<Real>(d));
    if (probs.size() != heads * seq * seq || d_out.shape() != q.shape())
        throw DimensionError("gqa_attention_backward: cache/gradient shape mismatch");

    d_q = Tensor<Real>(q.shape());
    d_k = Tensor<Real>(k.shape());
    d_v = Tensor<Real>(v.shape());
    std::vector<Real> d_p(seq);

    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t kvh = h / group;
        for (std::size_t i = 0; i < seq; ++i) {
            const Real* p = &probs[(h * seq + i) * seq];
            const Real* doi = &d_out[(i * heads + h) * d];
            Real weighted = 0;
            for (std::size_t j = 0; j < seq; ++j) {
                if (p[j] == Real(0)) {
                    d_p[j] = 0;
                    continue;
                }
                d_p[j] = dot(doi, &v[(j * kv_heads + kvh) * d], d);
                weighted += p[j] * d_p[j];
                Real* dvj = &d_v[(j * kv_heads + kvh) * d];
                for (std::size_t t = 0; t < d; ++t) dvj[t] += p[j] * doi[t];
            }
            const Real* qi = &q[(i * heads + h) * d];
            Real* dqi = &d_q[(i * heads + h) * d];
            for (std::size_t j = 0; j < seq; ++j) {
                if (p[j] == Real(0)) continue;
                const Real ds = p[j] * (d_p[j] - weighted) * scale;
                const Real* kj = &k[(j * kv_heads + kvh) * d];
                Real* dkj = &d_k[(j * kv_heads + kvh) * d];
                for (std::size_t t = 0; t < d; ++t) {
                    dqi[t] += ds * kj[t];
                    dkj[t] += ds * qi[t];
                }
            }
        }
    }
}

#define PTK_INSTANTIATE_OPS(Real)                                                                 \
    template std::vector<Real> squared_relu<Real>(std::span<const Real>);                        \
    template std::vector<Real> rope_rotate<Real>(std::span<const Real>, std::size_t, double);    \
    template void rope_rotate_inplace<Real>(std::span<Real>, std::size_t, double, int);          \
    template void softmax_inplace<Real>(std::span<Real>);                                        \
    template Tensor<Real> gqa_attention<Real>(const Tensor<Real>&, const Tensor<Real>&,          \
                                              const Tensor<Real>&, bool, std::vector<Real>*);    \
    template void gqa_attention_backward<Real>(const Tensor<Real>&, const Tensor<Real>&,         \
                                               const Tensor<Real>&, const std::vector<Real>&,    \
                                               const Tensor<Real>&, Tensor<Real>&, Tensor<Real>&, \
                                               Tensor<Real>&);

PTK_INSTANTIATE_OPS(float)
PTK_INSTANTIATE_OPS(double)

}  // namespace ptk
