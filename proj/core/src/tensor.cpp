#include "avs/tensor.hpp"

#include <numeric>
#include <string>

#include "avs/errors.hpp"

namespace avs {

std::size_t shape_volume(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeError("negative dimension " + std::to_string(d));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_volume(shape_)) {
        throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                         " does not match shape volume " +
                         std::to_string(shape_volume(shape_)));
    }
}

std::size_t Tensor::offset(std::initializer_list<int> index) const {
    if (index.size() != shape_.size()) throw ShapeError("index rank mismatch");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (int i : index) {
        if (i < 0 || i >= shape_[axis]) throw ShapeError("index out of range");
        off = off * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(i);
        ++axis;
    }
    return off;
}

double& Tensor::at(std::initializer_list<int> index) { return data_[offset(index)]; }
double Tensor::at(std::initializer_list<int> index) const { return data_[offset(index)]; }

Tensor Tensor::slice_leading(int index) const {
    if (shape_.empty() || index < 0 || index >= shape_[0]) {
        throw ShapeError("slice_leading index out of range");
    }
    std::vector<int> sub(shape_.begin() + 1, shape_.end());
    const std::size_t n = shape_volume(sub);
    std::vector<double> d(data_.begin() + static_cast<std::ptrdiff_t>(n * index),
                          data_.begin() + static_cast<std::ptrdiff_t>(n * (index + 1)));
    return Tensor(std::move(sub), std::move(d));
}

}  // namespace avs
