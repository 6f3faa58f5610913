#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptk/model/config.hpp"
#include "ptk/model/tensor.hpp"
#include "ptk/util/rng.hpp"

namespace ptk {

/// Weights of one pre-norm decoder block. Projections are stored [in, out].
template <class Real>
struct LayerParams {
    Tensor<Real> attn_norm;  // [hidden]
    Tensor<Real> wq;         // [hidden, hidden]
    Tensor<Real> wk;         // [hidden, kv_dim]
    Tensor<Real> wv;         // [hidden, kv_dim]
    Tensor<Real> wo;         // [hidden, hidden]
    Tensor<Real> mlp_norm;   // [hidden]
    Tensor<Real> w_up;       // [hidden, ffn]
    Tensor<Real> w_down;     // [ffn, hidden]
};

template <class Real>
struct Params {
    Tensor<Real> embedding;  // [vocab, hidden]
    std::vector<LayerParams<Real>> layers;
    Tensor<Real> final_norm;  // [hidden]
    Tensor<Real> lm_head;     // [hidden, vocab]

    /// Zero tensors of the right shapes (norm gains included, also zero).
    static Params zeros(const ModelConfig& config);

    /// Calls f(name, tensor) for every tensor in canonical order.
    template <class F>
    void visit(F&& f) {
        f(std::string("embedding"), embedding);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "layers." + std::to_string(l) + ".";
            auto& L = layers[l];
            f(p + "attn_norm", L.attn_norm);
            f(p + "wq", L.wq);
            f(p + "wk", L.wk);
            f(p + "wv", L.wv);
            f(p + "wo", L.wo);
            f(p + "mlp_norm", L.mlp_norm);
            f(p + "w_up", L.w_up);
            f(p + "w_down", L.w_down);
        }
        f(std::string("final_norm"), final_norm);
        f(std::string("lm_head"), lm_head);
    }

    template <class F>
    void visit(F&& f) const {
        const_cast<Params*>(this)->visit(
            [&](const std::string& name, Tensor<Real>& t) { f(name, static_cast<const Tensor<Real>&>(t)); });
    }

    std::size_t size() const;
    std::vector<Real> flatten() const;
    void unflatten(std::span<const Real> flat);

    template <class Other>
    Params<Other> cast() const;
};

/// Normal(0, 0.02) weights, output projections (wo, w_down) scaled by
/// 1/sqrt(2 * num_layers), norm gains at 1.
template <class Real>
Params<Real> init_params(const ModelConfig& config, Rng& rng, double stddev = 0.02);

/// Tallies matmul FLOPs (2*m*n*k each) seen during a forward pass. Attention
/// score and value products are counted as dense seq x seq matmuls.
struct FlopCounter {
    std::uint64_t matmul_flops = 0;
    void add_matmul(std::uint64_t m, std::uint64_t n, std::uint64_t k) { matmul_flops += 2 * m * n * k; }
};

/// Next-token logits [seq, vocab] for one sequence.
template <class Real>
Tensor<Real> transformer_forward(const ModelConfig& config, const Params<Real>& params,
                                 std::span<const TokenId> tokens, FlopCounter* flops = nullptr);

template <class Real>
struct LossAndGrad {
    Real loss = 0;
    Params<Real> grad;
};

/// Mean cross-entropy of tokens[1..n) given logits at [0..n-1), with the
/// gradient of every parameter tensor.
template <class Real>
LossAndGrad<Real> loss_and_grad(const ModelConfig& config, const Params<Real>& params,
                                std::span<const TokenId> tokens);

template <class Real>
Real sequence_loss(const ModelConfig& config, const Params<Real>& params, std::span<const TokenId> tokens);

inline constexpr double kRmsNormEps = 1e-5;

}  // namespace ptk
