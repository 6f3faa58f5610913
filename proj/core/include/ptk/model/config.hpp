#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ptk {

using TokenId = std::uint32_t;

/// Size hyper-parameters of a decoder-only transformer.
///
/// Invariants (checked by validate()):
///   hidden_dim == num_heads * head_dim, num_heads % num_kv_heads == 0,
///   head_dim is even, every count >= 1 (num_layers may be 0), rope_base > 0.
struct ModelConfig {
    std::size_t num_layers = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_heads = 0;
    std::size_t num_kv_heads = 0;
    std::size_t head_dim = 0;
    std::size_t ffn_dim = 0;
    std::size_t seq_len = 0;
    std::size_t vocab_size = 0;
    double rope_base = 10000.0;

    /// 32 layers, hidden 6144, 48 query heads, 8 kv heads, seq 4096, vocab 256k.
    /// ffn_dim defaults to 4 * hidden.
    static ModelConfig reference_15b();

    std::size_t kv_dim() const { return num_kv_heads * head_dim; }
    std::size_t group_size() const { return num_heads / num_kv_heads; }

    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string to_json(const ModelConfig& config);
ModelConfig model_config_from_json(std::string_view json);
ModelConfig load_model_config(const std::string& path);
void save_model_config(const std::string& path, const ModelConfig& config);

struct LayerParamCount {
    std::uint64_t attention = 0;
    std::uint64_t mlp = 0;
    std::uint64_t norm = 0;

    std::uint64_t total() const { return attention + mlp + norm; }
};

struct ParamCount {
    std::uint64_t embedding = 0;      // input + output embedding (untied)
    std::uint64_t non_embedding = 0;  // all layers + final norm
    std::vector<LayerParamCount> per_layer;

    std::uint64_t total() const { return embedding + non_embedding; }
};

/// Closed-form parameter count. Norms are gain-only; no biases anywhere.
ParamCount param_count(const ModelConfig& config);

}  // namespace ptk
