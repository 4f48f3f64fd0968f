#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace avs {

// Dense row-major N-d array of doubles. Plain value type; no autograd.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<double> data);

    const std::vector<int>& shape() const { return shape_; }
    int dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::initializer_list<int> index);
    double at(std::initializer_list<int> index) const;

    // Contiguous sub-tensor along the leading axis.
    Tensor slice_leading(int index) const;

    bool operator==(const Tensor&) const = default;

private:
    std::size_t offset(std::initializer_list<int> index) const;

    std::vector<int> shape_;
    std::vector<double> data_;
};

std::size_t shape_volume(const std::vector<int>& shape);

}  // namespace avs
