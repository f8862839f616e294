#include "acgan/tensor.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

namespace acgan {

std::string shape_str(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
}

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
    for (auto e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    values_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    check_shape(shape_);
    if (shape_numel(shape_) != values_.size()) {
        throw ShapeError("tensor " + shape_str(shape_) + " given " +
                         std::to_string(values_.size()) + " values");
    }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const noexcept {
    return shape_.size() >= 2 ? shape_[0] : 1;
}

std::size_t Tensor::cols() const noexcept {
    if (shape_.empty()) return 0;
    return shape_.size() >= 2 ? values_.size() / shape_[0] : shape_[0];
}

double Tensor::item() const {
    if (values_.size() != 1) {
        throw ShapeError("item() requires a single element, shape is " + shape_str(shape_));
    }
    return values_[0];
}

bool Tensor::all_finite() const noexcept {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::gather_rows(std::span<const std::size_t> idx) const {
    const std::size_t c = cols();
    const std::size_t r = rows();
    Tensor out({idx.size(), c});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= r) throw ShapeError("gather_rows index out of range");
        std::memcpy(&out.values_[i * c], &values_[idx[i] * c], c * sizeof(double));
    }
    return out;
}

Tensor Tensor::row(std::size_t r) const {
    const std::size_t one[] = {r};
    return gather_rows(one);
}

std::uint64_t checksum(std::span<const Tensor> tensors) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& t : tensors) {
        for (double v : t.values()) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        }
    }
    return h;
}

}  // namespace acgan
