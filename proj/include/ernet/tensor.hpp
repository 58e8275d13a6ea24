#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ernet/errors.hpp"

namespace ernet {

// Dense row-major tensor of doubles.  Weights are stored as
//   FC:     {out, in}
//   Conv2D: {out_channels, in_channels, kh, kw}
// Both layouts expose a common (unit_out, unit_in, element) view used by the
// mask and ticket machinery: for FC the element axis has size 1.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)),
          data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                                std::multiplies<>()),
                fill) {}

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double& at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    double at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    // (out, in, element) view; valid for both FC and conv weight layouts.
    std::size_t out_units() const { return shape_.empty() ? 0 : shape_[0]; }
    std::size_t in_units() const { return shape_.size() < 2 ? 0 : shape_[1]; }
    std::size_t elems() const {
        std::size_t e = 1;
        for (std::size_t k = 2; k < shape_.size(); ++k) e *= shape_[k];
        return e;
    }
    double& at_oie(std::size_t o, std::size_t i, std::size_t e) {
        return data_[(o * in_units() + i) * elems() + e];
    }
    double at_oie(std::size_t o, std::size_t i, std::size_t e) const {
        return data_[(o * in_units() + i) * elems() + e];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    const std::vector<double>& flat() const { return data_; }
    std::vector<double>& flat() { return data_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace ernet
