#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ptk/model/tensor.hpp"

namespace ptk {

template <class Real>
Real squared_relu(Real x) {
    const Real r = x > Real(0) ? x : Real(0);
    return r * r;
}

template <class Real>
Real squared_relu_grad(Real x) {
    return x > Real(0) ? Real(2) * x : Real(0);
}

template <class Real>
std::vector<Real> squared_relu(std::span<const Real> x);

/// Rotates pairs (v[2i], v[2i+1]) by position * base^(-2i/d). Throws ConfigError on odd length.
template <class Real>
std::vector<Real> rope_rotate(std::span<const Real> vec, std::size_t position, double base);

/// In-place rotation. `sign` = -1 applies the inverse (transpose) rotation.
template <class Real>
void rope_rotate_inplace(std::span<Real> vec, std::size_t position, double base, int sign = 1);

/// Numerically stable in-place softmax.
template <class Real>
void softmax_inplace(std::span<Real> row);

/// Grouped-query attention.
///
/// q: [seq, num_heads, head_dim]; k, v: [seq, num_kv_heads, head_dim].
/// Query head h reads kv head h / (num_heads / num_kv_heads). Scores are
/// scaled by 1/sqrt(head_dim). With `causal`, row i only sees positions <= i
/// and masked positions are never touched, so outputs at i are independent of
/// later inputs bit-for-bit.
///
/// If `probs` is non-null it receives the attention weights laid out as
/// [num_heads, seq, seq] (zeros above the diagonal when causal).
template <class Real>
Tensor<Real> gqa_attention(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                           bool causal, std::vector<Real>* probs = nullptr);

/// Backward of gqa_attention given the cached probabilities.
template <class Real>
void gqa_attention_backward(const Tensor<Real>& q, const Tensor<Real>& k, const Tensor<Real>& v,
                            const std::vector<Real>& probs, const Tensor<Real>& d_out,
                            Tensor<Real>& d_q, Tensor<Real>& d_k, Tensor<Real>& d_v);

}  // namespace ptk
