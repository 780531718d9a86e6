#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bijepa {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major float64 array with an optional gradient slot.
//
// Tensor is a handle: copies share storage, the same way parameters are shared
// between a Network and the optimizer that updates it. Use clone() for an
// independent copy.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    const Shape& shape() const noexcept { return impl_->shape; }
    std::size_t rank() const noexcept { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const noexcept { return impl_->values.size(); }

    std::span<double> values() noexcept { return impl_->values; }
    std::span<const double> values() const noexcept { return impl_->values; }
    double& operator[](std::size_t i) { return impl_->values[i]; }
    double operator[](std::size_t i) const { return impl_->values[i]; }
    double at(std::initializer_list<std::size_t> index) const;
    double item() const;

    bool requires_grad() const noexcept { return impl_->requires_grad; }
    void set_requires_grad(bool flag) noexcept { impl_->requires_grad = flag; }

    bool has_grad() const noexcept { return impl_->grad_present; }
    std::span<const double> grad() const;
    // Allocates a zeroed gradient on first use.
    std::span<double> grad_buffer();
    void zero_grad();
    void clear_grad();

    Tensor clone() const;
    // Independent copy under another shape of equal element count.
    Tensor reshaped(Shape shape) const;

    bool same_storage(const Tensor& other) const noexcept { return impl_ == other.impl_; }
    bool all_finite() const;

private:
    struct Impl {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool grad_present = false;
        bool requires_grad = false;
    };

    std::shared_ptr<Impl> impl_;
};

} // namespace bijepa
