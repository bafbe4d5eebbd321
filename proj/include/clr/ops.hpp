#pragma once

#include <utility>
#include <vector>

#include "clr/kernels.hpp"
#include "clr/tensor.hpp"

namespace clr {

/// Cross-correlation. input BxCxHxW, weight C'xCxKHxKW, bias C'.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                      int pad);

/// Gradients of conv2d_forward. dweight/dbias are accumulated (+=).
void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& dout, int stride,
                     int pad, Tensor* dinput, Tensor* dweight, Tensor* dbias);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dout);

struct PoolResult {
    Tensor output;
    std::vector<std::int64_t> argmax;  // flat input offset per output element
};
PoolResult maxpool2x2_forward(const Tensor& x);
Tensor maxpool2x2_backward(const PoolResult& cached, const Tensor& dout,
                           const std::vector<int>& input_shape);

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
void linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dout, Tensor* dx,
                     Tensor* dweight, Tensor* dbias);

Tensor global_avg_pool_forward(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& dout, int h, int w);

struct LossResult {
    float loss = 0.0f;       // mean over the batch
    Tensor dlogits;          // (softmax - one_hot) / batch
};

/// Mean cross-entropy over the batch, stabilized by max subtraction.
/// labels[i] must lie in [0, K).
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// v / ||v||_2 when the norm exceeds 1e-12; v unchanged otherwise.
Tensor l2_normalize(const Tensor& v);
void l2_normalize_rows(Tensor& m);

}  // namespace clr
