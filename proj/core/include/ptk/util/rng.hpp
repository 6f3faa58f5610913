#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace ptk {

/// Seeded generator used for every random decision in a run.
///
/// Stages never share a stream; each one takes `fork("label")`, so adding or
/// reordering stages does not perturb the draws of the others.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    Rng fork(std::string_view label) const;

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    double normal(double mean = 0.0, double stddev = 1.0);

    /// Index drawn with probability proportional to `weights` (need not be normalized).
    std::size_t categorical(std::span<const double> weights);

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace ptk
