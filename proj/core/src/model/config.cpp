#include "ptk/model/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptk/util/errors.hpp"

namespace ptk {

ModelConfig ModelConfig::reference_15b() {
    ModelConfig c;
    c.num_layers = 32;
    c.hidden_dim = 6144;
    c.num_heads = 48;
    c.num_kv_heads = 8;
    c.head_dim = 128;
    c.ffn_dim = 4 * 6144;
    c.seq_len = 4096;
    c.vocab_size = 256000;
    c.rope_base = 10000.0;
    return c;
}

void ModelConfig::validate() const {
    if (hidden_dim == 0 || num_heads == 0 || num_kv_heads == 0 || head_dim == 0 || ffn_dim == 0 ||
        seq_len == 0 || vocab_size == 0)
        throw ConfigError("ModelConfig: all size fields must be >= 1");
    if (hidden_dim != num_heads * head_dim)
        throw ConfigError("ModelConfig: hidden_dim must equal num_heads * head_dim");
    if (num_heads % num_kv_heads != 0)
        throw ConfigError("ModelConfig: num_heads must be a multiple of num_kv_heads");
    if (head_dim % 2 != 0) throw ConfigError("ModelConfig: head_dim must be even for RoPE");
    if (!(rope_base > 0.0)) throw ConfigError("ModelConfig: rope_base must be positive");
}

std::string to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["num_layers"] = c.num_layers;
    j["hidden_dim"] = c.hidden_dim;
    j["num_heads"] = c.num_heads;
    j["num_kv_heads"] = c.num_kv_heads;
    j["head_dim"] = c.head_dim;
    j["ffn_dim"] = c.ffn_dim;
    j["seq_len"] = c.seq_len;
    j["vocab_size"] = c.vocab_size;
    j["rope_base"] = c.rope_base;
    return j.dump(2);
}

ModelConfig model_config_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("ModelConfig JSON: ") + e.what());
    }
    ModelConfig c;
    try {
        c.num_layers = j.at("num_layers").get<std::size_t>();
        c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        c.num_heads = j.at("num_heads").get<std::size_t>();
        c.num_kv_heads = j.at("num_kv_heads").get<std::size_t>();
        c.head_dim = j.contains("head_dim") ? j["head_dim"].get<std::size_t>()
                                            : (c.num_heads ? c.hidden_dim / c.num_heads : 0);
        c.ffn_dim = j.contains("ffn_dim") ? j["ffn_dim"].get<std::size_t>() : 4 * c.hidden_dim;
        c.seq_len = j.at("seq_len").get<std::size_t>();
        c.vocab_size = j.at("vocab_size").get<std::size_t>();
        c.rope_base = j.value("rope_base", 10000.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("ModelConfig JSON: ") + e.what());
    }
    c.validate();
    return c;
}

ModelConfig load_model_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_config_from_json(ss.str());
}

void save_model_config(const std::string& path, const ModelConfig& config) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot write model config: " + path);
    out << to_json(config) << '\n';
}

ParamCount param_count(const ModelConfig& c) {
    const std::uint64_t h = c.hidden_dim;
    ParamCount pc;
    pc.embedding = 2ULL * c.vocab_size * h;

    LayerParamCount layer;
    layer.attention = h * h + 2 * h * (c.num_kv_heads * c.head_dim) + h * h;
    layer.mlp = 2 * h * c.ffn_dim;
    layer.norm = 2 * h;

    pc.per_layer.assign(c.num_layers, layer);
    pc.non_embedding = c.num_layers * layer.total() + h;
    return pc;
}

}  // namespace ptk
