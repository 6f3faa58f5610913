#include "ptk/model/param_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "ptk/util/errors.hpp"

namespace ptk {

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw PipelineError("tensor file truncated");
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) bits = (bits << 8) | buf[i];
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
}

}  // namespace

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PipelineError("cannot write tensor file: " + path);
    out.write(kParamMagic, 4);
    put_le<std::uint32_t>(out, kParamFormatVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& nt : tensors) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nt.name.size()));
        out.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nt.tensor.rank()));
        for (std::size_t d : nt.tensor.shape()) put_le<std::uint64_t>(out, d);
        for (float v : nt.tensor.data()) put_le<float>(out, v);
    }
    if (!out) throw PipelineError("failed writing tensor file: " + path);
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PipelineError("cannot open tensor file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kParamMagic, 4) != 0)
        throw PipelineError("bad tensor file magic: " + path);
    const auto version = get_le<std::uint32_t>(in);
    if (version != kParamFormatVersion)
        throw PipelineError("unsupported tensor file version " + std::to_string(version));
    const auto count = get_le<std::uint32_t>(in);
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor nt;
        const auto name_len = get_le<std::uint32_t>(in);
        nt.name.resize(name_len);
        if (!in.read(nt.name.data(), name_len)) throw PipelineError("tensor file truncated");
        const auto rank = get_le<std::uint32_t>(in);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(in));
        std::vector<float> data(Tensor<float>::count(shape));
        for (auto& v : data) v = get_le<float>(in);
        nt.tensor = Tensor<float>(std::move(shape), std::move(data));
        tensors.push_back(std::move(nt));
    }
    return tensors;
}

template <class Real>
void save_params(const std::string& path, const Params<Real>& params) {
    std::vector<NamedTensor> tensors;
    params.visit([&](const std::string& name, const Tensor<Real>& t) {
        std::vector<float> d(t.data().begin(), t.data().end());
        tensors.push_back({name, Tensor<float>(t.shape(), std::move(d))});
    });
    write_tensor_file(path, tensors);
}

template <class Real>
Params<Real> load_params(const std::string& path, const ModelConfig& config) {
    auto tensors = read_tensor_file(path);
    std::map<std::string, const Tensor<float>*> by_name;
    for (const auto& nt : tensors) by_name[nt.name] = &nt.tensor;

    Params<Real> params = Params<Real>::zeros(config);
    std::size_t used = 0;
    params.visit([&](const std::string& name, Tensor<Real>& t) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw PipelineError("parameter file missing tensor " + name);
        if (it->second->shape() != t.shape()) throw DimensionError("parameter shape mismatch for " + name);
        std::copy(it->second->data().begin(), it->second->data().end(), t.data().begin());
        ++used;
    });
    if (used != tensors.size()) throw PipelineError("parameter file has unexpected extra tensors");
    return params;
}

template void save_params<float>(const std::string&, const Params<float>&);
template void save_params<double>(const std::string&, const Params<double>&);
template Params<float> load_params<float>(const std::string&, const ModelConfig&);
template Params<double> load_params<double>(const std::string&, const ModelConfig&);

}  // namespace ptk
