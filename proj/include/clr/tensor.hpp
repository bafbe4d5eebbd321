#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace clr {

/// Dense row-major n-dimensional float32 array. The numerics substrate for
/// images, activations, parameters and gradients.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(count(shape_)), 0.0f);
    }

    Tensor(std::vector<int> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != count(shape_))
            throw std::invalid_argument("Tensor: data length does not match shape");
    }

    static Tensor full(std::vector<int> shape, float value) {
        Tensor t(std::move(shape));
        for (auto& v : t.data_) v = value;
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    /// Element access for 4-d tensors (batch, channel, row, col).
    float& at4(int b, int c, int y, int x) {
        return data_[static_cast<std::size_t>(index4(b, c, y, x))];
    }
    float at4(int b, int c, int y, int x) const {
        return data_[static_cast<std::size_t>(index4(b, c, y, x))];
    }

    std::int64_t index4(int b, int c, int y, int x) const {
        return ((static_cast<std::int64_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    bool all_finite() const;

    /// Exact bitwise equality of shape and payload.
    bool bit_equal(const Tensor& other) const;

    std::string shape_string() const;

    static std::int64_t count(const std::vector<int>& shape);

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

void require_shape(const Tensor& t, const std::vector<int>& shape, const char* what);

}  // namespace clr
