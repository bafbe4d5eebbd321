#include "clr/params.hpp"

#include <cstring>
#include <stdexcept>

namespace clr {

Param& ParamSet::add(std::string name, Tensor init) {
    if (contains(name)) throw std::invalid_argument("ParamSet: duplicate parameter " + name);
    Param p;
    p.name = std::move(name);
    p.grad = Tensor(init.shape());
    p.momentum = Tensor(init.shape());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return params_.back();
}

Param& ParamSet::at(std::string_view name) {
    for (auto& p : params_)
        if (p.name == name) return p;
    throw std::invalid_argument("ParamSet: no parameter named " + std::string(name));
}

const Param& ParamSet::at(std::string_view name) const {
    for (const auto& p : params_)
        if (p.name == name) return p;
    throw std::invalid_argument("ParamSet: no parameter named " + std::string(name));
}

bool ParamSet::contains(std::string_view name) const {
    for (const auto& p : params_)
        if (p.name == name) return true;
    return false;
}

void ParamSet::zero_grads() {
    for (auto& p : params_)
        std::memset(p.grad.data(), 0, static_cast<std::size_t>(p.grad.numel()) * sizeof(float));
}

std::int64_t ParamSet::value_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
}

void sgd_step(ParamSet& params, float lr, float momentum, float weight_decay) {
    for (auto& p : params) {
        float* v = p.momentum.data();
        float* g = p.grad.data();
        float* x = p.value.data();
        const std::int64_t n = p.value.numel();
        for (std::int64_t i = 0; i < n; ++i) {
            v[i] = momentum * v[i] + g[i] + weight_decay * x[i];
            x[i] -= lr * v[i];
        }
    }
    params.zero_grads();
}

std::uint64_t checksum(const ParamSet& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
        const std::size_t n = static_cast<std::size_t>(p.value.numel()) * sizeof(float);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace clr
