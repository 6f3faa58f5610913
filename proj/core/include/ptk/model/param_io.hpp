#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptk/model/transformer.hpp"

namespace ptk {

// Binary layout (all integers little-endian):
//   "NMT4" | version u32 | tensor_count u32
//   per tensor: name_len u32 | name bytes | rank u32 | dims u64[rank] | f32[numel]
inline constexpr char kParamMagic[4] = {'N', 'M', 'T', '4'};
inline constexpr std::uint32_t kParamFormatVersion = 1;

struct NamedTensor {
    std::string name;
    Tensor<float> tensor;
};

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_tensor_file(const std::string& path);

template <class Real>
void save_params(const std::string& path, const Params<Real>& params);

/// Loads a parameter file into the layout implied by `config`; names and
/// shapes must match exactly.
template <class Real>
Params<Real> load_params(const std::string& path, const ModelConfig& config);

}  // namespace ptk
