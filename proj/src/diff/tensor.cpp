#include "gyronet/diff/tensor.hpp"

#include <cmath>

namespace gyronet::diff {

std::string to_string(Shape s) { return "[" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]"; }

namespace {

void require_finite(const std::vector<double>& data) {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw ShapeError("tensor entries must be finite");
        }
    }
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : shape_(shape), data_(std::move(data)), requires_grad_(requires_grad) {
    if (data_.size() != shape_.size()) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " + to_string(shape_));
    }
    require_finite(data_);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return Tensor(shape, std::vector<double>(shape.size(), 0.0), requires_grad);
}

Tensor Tensor::filled(Shape shape, double value) { return Tensor(shape, std::vector<double>(shape.size(), value)); }

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1, 1}, {value}, requires_grad); }

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
    const Shape s{1, values.size()};
    return Tensor(s, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values, bool requires_grad) {
    return Tensor({rows, cols}, std::vector<double>(values), requires_grad);
}

double Tensor::item() const {
    if (shape_.rows != 1 || shape_.cols != 1) {
        throw ShapeError("item() needs a 1x1 tensor, got " + to_string(shape_));
    }
    return data_[0];
}

Tensor Tensor::with_requires_grad(bool flag) const {
    Tensor t = *this;
    t.requires_grad_ = flag;
    return t;
}

Tensor TensorBuilder::build(bool requires_grad) && { return Tensor(shape_, std::move(data_), requires_grad); }

}  // namespace gyronet::diff
