#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "ptk/util/errors.hpp"

namespace ptk {

/// Dense row-major tensor owning its storage.
template <class Real>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, Real fill = Real(0))
        : shape_(std::move(shape)), data_(count(shape_), fill) {}

    Tensor(std::vector<std::size_t> shape, std::vector<Real> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size()) throw DimensionError("Tensor: shape/data size mismatch");
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }

    std::span<Real> data() { return data_; }
    std::span<const Real> data() const { return data_; }
    std::vector<Real>& storage() { return data_; }
    const std::vector<Real>& storage() const { return data_; }

    Real& operator[](std::size_t i) { return data_[i]; }
    const Real& operator[](std::size_t i) const { return data_[i]; }

    /// Row `i` of a tensor viewed as [shape[0], rest...].
    std::span<Real> row(std::size_t i) {
        const std::size_t stride = data_.size() / shape_.at(0);
        return std::span<Real>(data_).subspan(i * stride, stride);
    }
    std::span<const Real> row(std::size_t i) const {
        const std::size_t stride = data_.size() / shape_.at(0);
        return std::span<const Real>(data_).subspan(i * stride, stride);
    }

    void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<Real> data_;
};

}  // namespace ptk
