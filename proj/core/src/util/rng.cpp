#include "ptk/util/rng.hpp"

#include <cmath>
#include <numbers>

#include "ptk/util/errors.hpp"
#include "ptk/util/hash.hpp"

namespace ptk {

Rng Rng::fork(std::string_view label) const {
    return Rng(mix64(seed_ ^ mix64(fnv1a64(label))));
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw InputError("Rng::below: empty range");
    // Rejection sampling to avoid modulo bias.
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal(double mean, double stddev) {
    // Box-Muller keeps the stream identical across standard libraries.
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
}

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (weights.empty() || !(total > 0.0)) throw ConfigError("categorical: no positive weight");
    const double target = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (target < acc) return i;
    }
    // Rounding can leave target == total; return the last positive entry.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return weights.size() - 1;
}

}  // namespace ptk
