#include "bijepa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bijepa {

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Tensor::Tensor() : Tensor(Shape{0}) {}

Tensor::Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    impl_->values.assign(shape_numel(shape), 0.0);
    impl_->shape = std::move(shape);
    impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
    if (shape_numel(shape) != values.size()) {
        throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " holds " +
                                    std::to_string(shape_numel(shape)) + " elements, got " +
                                    std::to_string(values.size()));
    }
    impl_->shape = std::move(shape);
    impl_->values = std::move(values);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return Tensor(std::move(shape), requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.impl_->values.begin(), t.impl_->values.end(), value);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(Shape{1}, std::vector<double>{value}, requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw std::out_of_range("Tensor::dim: axis " + std::to_string(axis) + " out of range for shape " +
                                shape_str(shape()));
    }
    return impl_->shape[axis];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != rank()) throw std::invalid_argument("Tensor::at: rank mismatch");
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= impl_->shape[axis]) throw std::out_of_range("Tensor::at: index out of range");
        flat = flat * impl_->shape[axis] + i;
        ++axis;
    }
    return impl_->values[flat];
}

double Tensor::item() const {
    if (numel() != 1) throw std::logic_error("Tensor::item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    return impl_->values[0];
}

std::span<const double> Tensor::grad() const {
    if (!impl_->grad_present) return {};
    return impl_->grad;
}

std::span<double> Tensor::grad_buffer() {
    if (!impl_->grad_present) {
        impl_->grad.assign(impl_->values.size(), 0.0);
        impl_->grad_present = true;
    }
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (impl_->grad_present) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void Tensor::clear_grad() {
    impl_->grad.clear();
    impl_->grad.shrink_to_fit();
    impl_->grad_present = false;
}

Tensor Tensor::clone() const {
    Tensor t(impl_->shape, impl_->values, impl_->requires_grad);
    return t;
}

Tensor Tensor::reshaped(Shape shape) const {
    return Tensor(std::move(shape), impl_->values, false);
}

bool Tensor::all_finite() const {
    return std::all_of(impl_->values.begin(), impl_->values.end(), [](double v) { return std::isfinite(v); });
}

} // namespace bijepa
