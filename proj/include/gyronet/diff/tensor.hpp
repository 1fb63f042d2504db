#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gyronet::diff {

/// Row-major 2-D extents. Vectors are 1×n rows; scalars are 1×1.
struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const noexcept { return rows * cols; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(Shape s);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Tensor {
public:
    Tensor() = default;
    /// Throws ShapeError if data.size() != shape.size() or any entry is non-finite.
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor filled(Shape shape, double value);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor row(std::vector<double> values, bool requires_grad = false);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values,
                         bool requires_grad = false);

    Shape shape() const noexcept { return shape_; }
    std::size_t rows() const noexcept { return shape_.rows; }
    std::size_t cols() const noexcept { return shape_.cols; }
    std::size_t size() const noexcept { return data_.size(); }
    bool requires_grad() const noexcept { return requires_grad_; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * shape_.cols, shape_.cols}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_.cols + c]; }
    double operator[](std::size_t i) const { return data_[i]; }
    /// Value of a 1×1 tensor.
    double item() const;

    Tensor with_requires_grad(bool flag) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    friend class Tape;
    friend class TensorBuilder;
    Shape shape_;
    std::vector<double> data_;
    bool requires_grad_ = false;
};

/// Mutable staging buffer for building a Tensor without per-element validation.
class TensorBuilder {
public:
    explicit TensorBuilder(Shape shape) : shape_(shape), data_(shape.size(), 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_.cols + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    std::span<double> data() noexcept { return data_; }
    std::span<double> row_span(std::size_t r) { return {data_.data() + r * shape_.cols, shape_.cols}; }
    Shape shape() const noexcept { return shape_; }

    Tensor build(bool requires_grad = false) &&;

private:
    Shape shape_;
    std::vector<double> data_;
};

}  // namespace gyronet::diff
