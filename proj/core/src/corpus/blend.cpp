#include "ptk/corpus/blend.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptk/util/errors.hpp"

namespace ptk {

namespace {

void normalize(std::vector<BlendCategory>& cats) {
    double total = 0.0;
    for (const auto& c : cats) total += c.weight;
    for (auto& c : cats) {
        c.weight /= total;
        double leaf_total = 0.0;
        for (const auto& l : c.leaves) leaf_total += l.weight;
        for (auto& l : c.leaves) l.weight /= leaf_total;
    }
}

}  // namespace

BlendSpec::BlendSpec(std::vector<BlendCategory> categories) : categories_(std::move(categories)) {
    if (categories_.empty()) throw ConfigError("BlendSpec: no categories");
    std::set<std::string> cat_names, leaf_names;
    for (auto& c : categories_) {
        if (!(c.weight > 0.0) || !std::isfinite(c.weight))
            throw ConfigError("BlendSpec: category '" + c.name + "' weight must be positive");
        if (!cat_names.insert(c.name).second) throw ConfigError("BlendSpec: duplicate category " + c.name);
        if (c.leaves.empty()) c.leaves.push_back({c.name, 1.0});
        for (const auto& l : c.leaves) {
            if (!(l.weight > 0.0) || !std::isfinite(l.weight))
                throw ConfigError("BlendSpec: leaf '" + l.name + "' weight must be positive");
            if (!leaf_names.insert(l.name).second) throw ConfigError("BlendSpec: duplicate leaf " + l.name);
        }
    }
    normalize(categories_);
}

std::vector<std::pair<std::string, double>> BlendSpec::leaf_weights() const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& c : categories_)
        for (const auto& l : c.leaves) out.emplace_back(l.name, c.weight * l.weight);
    return out;
}

double BlendSpec::leaf_weight(std::string_view leaf) const {
    for (const auto& c : categories_)
        for (const auto& l : c.leaves)
            if (l.name == leaf) return c.weight * l.weight;
    return 0.0;
}

double BlendSpec::category_weight(std::string_view category) const {
    for (const auto& c : categories_)
        if (c.name == category) return c.weight;
    return 0.0;
}

const std::string* BlendSpec::category_of(std::string_view leaf) const {
    for (const auto& c : categories_)
        for (const auto& l : c.leaves)
            if (l.name == leaf) return &c.name;
    return nullptr;
}

BlendSpec BlendSpec::upweighted(const std::map<std::string, double>& factors) const {
    auto cats = categories_;
    for (const auto& [name, f] : factors)
        if (!(f > 0.0)) throw ConfigError("upweight factor for '" + name + "' must be positive");
    for (auto& c : cats) {
        if (auto it = factors.find(c.name); it != factors.end()) c.weight *= it->second;
        // A leaf factor scales the leaf's absolute weight, so the category
        // grows by the same amount its leaf mass does.
        double before = 0.0, after = 0.0;
        for (auto& l : c.leaves) {
            before += l.weight;
            if (l.name != c.name)  // implicit leaf; factor already applied to the category
                if (auto it = factors.find(l.name); it != factors.end()) l.weight *= it->second;
            after += l.weight;
        }
        if (before > 0.0) c.weight *= after / before;
    }
    return BlendSpec(std::move(cats));
}

BlendSpec BlendSpec::with_category(BlendCategory category, double weight) const {
    if (!(weight > 0.0 && weight < 1.0)) throw ConfigError("with_category: weight must be in (0, 1)");
    auto cats = categories_;
    for (auto& c : cats) c.weight *= (1.0 - weight);
    category.weight = weight;
    cats.push_back(std::move(category));
    return BlendSpec(std::move(cats));
}

bool operator==(const BlendSpec& a, const BlendSpec& b) {
    if (a.categories_.size() != b.categories_.size()) return false;
    for (std::size_t i = 0; i < a.categories_.size(); ++i) {
        const auto& x = a.categories_[i];
        const auto& y = b.categories_[i];
        if (x.name != y.name || x.weight != y.weight || x.leaves.size() != y.leaves.size()) return false;
        for (std::size_t j = 0; j < x.leaves.size(); ++j)
            if (x.leaves[j].name != y.leaves[j].name || x.leaves[j].weight != y.leaves[j].weight) return false;
    }
    return true;
}

std::string BlendSpec::to_json() const {
    nlohmann::ordered_json j;
    auto cats = nlohmann::ordered_json::array();
    for (const auto& c : categories_) {
        nlohmann::ordered_json cj;
        cj["name"] = c.name;
        cj["weight"] = c.weight;
        auto leaves = nlohmann::ordered_json::array();
        for (const auto& l : c.leaves) leaves.push_back({{"name", l.name}, {"weight", l.weight}});
        cj["leaves"] = std::move(leaves);
        cats.push_back(std::move(cj));
    }
    j["categories"] = std::move(cats);
    return j.dump(2);
}

BlendSpec BlendSpec::from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        std::vector<BlendCategory> cats;
        for (const auto& cj : j.at("categories")) {
            BlendCategory c;
            c.name = cj.at("name").get<std::string>();
            c.weight = cj.at("weight").get<double>();
            if (cj.contains("leaves"))
                for (const auto& lj : cj["leaves"])
                    c.leaves.push_back({lj.at("name").get<std::string>(), lj.at("weight").get<double>()});
            cats.push_back(std::move(c));
        }
        return BlendSpec(std::move(cats));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("BlendSpec JSON: ") + e.what());
    }
}

BlendSpec BlendSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open blend: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

BlendSpec reference_top_level_blend() {
    return BlendSpec({{"english", 0.70, {}}, {"multilingual", 0.15, {}}, {"code", 0.15, {}}});
}

BlendSampler::BlendSampler(const BlendSpec& blend, Rng rng) : blend_(blend), rng_(std::move(rng)) {
    if (blend.empty()) throw ConfigError("sample_stream: empty blend");
    for (const auto& c : blend.categories()) {
        category_weights_.push_back(c.weight);
        auto& lw = leaf_weights_.emplace_back();
        for (const auto& l : c.leaves) lw.push_back(l.weight);
    }
}

BlendSampler::Draw BlendSampler::next() {
    const std::size_t c = rng_.categorical(category_weights_);
    const std::size_t l = rng_.categorical(leaf_weights_[c]);
    return {c, l};
}

const std::string& BlendSampler::leaf_name(const Draw& d) const {
    return blend_.categories()[d.category].leaves[d.leaf].name;
}

const std::string& BlendSampler::category_name(const Draw& d) const {
    return blend_.categories()[d.category].name;
}

std::vector<std::string> sample_stream(const BlendSpec& blend, std::uint64_t seed, std::size_t n) {
    if (n == 0) throw InputError("sample_stream: n must be >= 1");
    BlendSampler sampler(blend, Rng(seed).fork("blend"));
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sampler.leaf_name(sampler.next()));
    return out;
}

}  // namespace ptk
