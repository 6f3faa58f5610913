#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ptk/util/rng.hpp"

namespace ptk {

struct BlendLeaf {
    std::string name;
    double weight = 0.0;
};

struct BlendCategory {
    std::string name;
    double weight = 0.0;
    std::vector<BlendLeaf> leaves;
};

/// Two-level sampling weights: category, then leaf (language or source)
/// within the category. Weights are normalized per level on construction and
/// leaf names are unique across the whole blend. A category given without
/// leaves gets one leaf carrying the category's own name.
class BlendSpec {
public:
    BlendSpec() = default;
    explicit BlendSpec(std::vector<BlendCategory> categories);

    const std::vector<BlendCategory>& categories() const { return categories_; }
    bool empty() const { return categories_.empty(); }

    /// (leaf, absolute weight = category weight * leaf weight) in declaration order.
    std::vector<std::pair<std::string, double>> leaf_weights() const;
    double leaf_weight(std::string_view leaf) const;
    double category_weight(std::string_view category) const;
    const std::string* category_of(std::string_view leaf) const;
    bool has_leaf(std::string_view leaf) const { return category_of(leaf) != nullptr; }

    /// Multiplies the absolute weight of each named category or leaf by its
/// factor, then renormalizes.
    BlendSpec upweighted(const std::map<std::string, double>& factors) const;

    /// Adds a category at absolute weight w, scaling existing categories by 1 - w.
    BlendSpec with_category(BlendCategory category, double weight) const;

    std::string to_json() const;
    static BlendSpec from_json(std::string_view json);
    static BlendSpec load(const std::string& path);

    friend bool operator==(const BlendSpec&, const BlendSpec&);

private:
    std::vector<BlendCategory> categories_;
};

/// English / multilingual / code at 70 / 15 / 15.
BlendSpec reference_top_level_blend();

/// Draws (category, leaf) pairs i.i.d.; deterministic given the Rng state.
class BlendSampler {
public:
    BlendSampler(const BlendSpec& blend, Rng rng);

    struct Draw {
        std::size_t category;
        std::size_t leaf;  // index within the category
    };

    Draw next();
    const std::string& leaf_name(const Draw& d) const;
    const std::string& category_name(const Draw& d) const;

private:
    BlendSpec blend_;
    Rng rng_;
    std::vector<double> category_weights_;
    std::vector<std::vector<double>> leaf_weights_;
};

/// n i.i.d. two-level draws, returning leaf names. Throws ConfigError on an empty blend.
std::vector<std::string> sample_stream(const BlendSpec& blend, std::uint64_t seed, std::size_t n);

}  // namespace ptk
