#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ptk {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
};

/// First/second moments for a contiguous slice of the flattened parameters.
template <class Real>
struct AdamState {
    std::vector<Real> m;
    std::vector<Real> v;
    std::uint64_t step = 0;

    explicit AdamState(std::size_t n = 0) : m(n, Real(0)), v(n, Real(0)) {}
};

/// Bias-corrected Adam update, elementwise over params/grads/state of equal
/// length. `step` is the 1-based step number used for bias correction.
template <class Real>
void adam_update(std::span<Real> params, std::span<const Real> grads, std::span<Real> m, std::span<Real> v,
                 std::uint64_t step, double lr, const AdamConfig& config);

}  // namespace ptk
