#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clr/tensor.hpp"

namespace clr {

/// One named parameter with its gradient and momentum buffers.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;      // same shape as value
    Tensor momentum;  // same shape as value
};

/// Insertion-ordered collection of parameters. Order defines checkpoint
/// layout and checksum traversal.
class ParamSet {
public:
    Param& add(std::string name, Tensor init);
    Param& at(std::string_view name);
    const Param& at(std::string_view name) const;
    bool contains(std::string_view name) const;

    std::size_t size() const { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grads();
    std::int64_t value_count() const;

private:
    std::vector<Param> params_;
};

/// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v;
/// gradients are zeroed afterwards.
void sgd_step(ParamSet& params, float lr, float momentum, float weight_decay);

/// FNV-1a 64 over the raw value bytes, in parameter order. Used for the
/// backbone freeze audit.
std::uint64_t checksum(const ParamSet& params);

}  // namespace clr
