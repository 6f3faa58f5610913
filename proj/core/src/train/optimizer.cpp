#include "ptk/train/optimizer.hpp"

#include <cmath>

#include "ptk/util/errors.hpp"

namespace ptk {

template <class Real>
void adam_update(std::span<Real> params, std::span<const Real> grads, std::span<Real> m, std::span<Real> v,
                 std::uint64_t step, double lr, const AdamConfig& c) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
        throw DimensionError("adam_update: length mismatch");
    if (step == 0) throw InputError("adam_update: step is 1-based");
    const Real b1 = static_cast<Real>(c.beta1);
    const Real b2 = static_cast<Real>(c.beta2);
    const Real corr1 = Real(1) - static_cast<Real>(std::pow(c.beta1, static_cast<double>(step)));
    const Real corr2 = Real(1) - static_cast<Real>(std::pow(c.beta2, static_cast<double>(step)));
    const Real alpha = static_cast<Real>(lr);
    const Real eps = static_cast<Real>(c.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = b1 * m[i] + (Real(1) - b1) * grads[i];
        v[i] = b2 * v[i] + (Real(1) - b2) * grads[i] * grads[i];
        const Real m_hat = m[i] / corr1;
        const Real v_hat = v[i] / corr2;
        params[i] -= alpha * m_hat / (std::sqrt(v_hat) + eps);
    }
}

template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                 std::uint64_t, double, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                  std::uint64_t, double, const AdamConfig&);

}  // namespace ptk
