#include "clr/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace clr {

std::int64_t Tensor::count(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
        n *= d;
    }
    return n;
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

bool Tensor::bit_equal(const Tensor& other) const {
    if (shape_ != other.shape_) return false;
    if (data_.empty()) return other.data_.empty();
    return std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(float)) == 0;
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << 'x';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

static std::string format_shape(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

void require_shape(const Tensor& t, const std::vector<int>& shape, const char* what) {
    if (t.shape() != shape) {
        throw std::invalid_argument(std::string(what) + ": expected shape " + format_shape(shape) +
                                    ", got " + t.shape_string());
    }
}

}  // namespace clr
