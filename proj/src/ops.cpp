#include "clr/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace clr {

namespace {

ConvDims dims_for(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                  int pad) {
    if (input.rank() != 4) throw std::invalid_argument("conv2d: input must be 4-d (BxCxHxW)");
    if (weight.rank() != 4) throw std::invalid_argument("conv2d: weight must be 4-d");
    if (weight.dim(1) != input.dim(1))
        throw std::invalid_argument("conv2d: weight in-channels " + std::to_string(weight.dim(1)) +
                                    " do not match input channels " +
                                    std::to_string(input.dim(1)));
    if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0)))
        throw std::invalid_argument("conv2d: bias must be 1-d with one entry per output channel");
    return conv_dims(input.dim(0), input.dim(1), input.dim(2), input.dim(3), weight.dim(0),
                     weight.dim(2), weight.dim(3), stride, pad);
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                      int pad) {
    const ConvDims d = dims_for(input, weight, bias, stride, pad);
    Tensor out({d.batch, d.out_ch, d.out_h, d.out_w});
    kernels::conv2d_forward(input.data(), weight.data(), bias.empty() ? nullptr : bias.data(), d,
                            out.data());
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weight, const Tensor& dout, int stride,
                     int pad, Tensor* dinput, Tensor* dweight, Tensor* dbias) {
    const ConvDims d = dims_for(input, weight, Tensor(), stride, pad);
    require_shape(dout, {d.batch, d.out_ch, d.out_h, d.out_w}, "conv2d_backward: dout");
    if (dinput) {
        require_shape(*dinput, input.shape(), "conv2d_backward: dinput");
        kernels::conv2d_backward_input(weight.data(), dout.data(), d, dinput->data());
    }
    if (dweight) {
        require_shape(*dweight, weight.shape(), "conv2d_backward: dweight");
        kernels::conv2d_backward_params(input.data(), dout.data(), d, dweight->data(),
                                        dbias ? dbias->data() : nullptr);
    }
}

Tensor relu_forward(const Tensor& x) {
    Tensor y(x.shape());
    kernels::relu_forward(x.data(), y.data(), x.numel());
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dout) {
    if (!x.same_shape(dout)) throw std::invalid_argument("relu_backward: shape mismatch");
    Tensor dx(x.shape());
    kernels::relu_backward(x.data(), dout.data(), dx.data(), x.numel());
    return dx;
}

PoolResult maxpool2x2_forward(const Tensor& x) {
    if (x.rank() != 4) throw std::invalid_argument("maxpool2x2: input must be 4-d");
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h < 2 || w < 2) throw std::invalid_argument("maxpool2x2: spatial dims must be >= 2");
    PoolResult r{Tensor({b, c, h / 2, w / 2}), {}};
    r.argmax.resize(static_cast<std::size_t>(r.output.numel()));
    kernels::maxpool2x2_forward(x.data(), b, c, h, w, r.output.data(), r.argmax.data());
    return r;
}

Tensor maxpool2x2_backward(const PoolResult& cached, const Tensor& dout,
                           const std::vector<int>& input_shape) {
    if (!cached.output.same_shape(dout))
        throw std::invalid_argument("maxpool2x2_backward: dout does not match cached forward");
    Tensor dx(input_shape);
    kernels::maxpool2x2_backward(cached.argmax.data(), dout.data(), dout.numel(), dx.data(),
                                 dx.numel());
    return dx;
}

Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(1))
        throw std::invalid_argument("linear_forward: need x BxD and weight KxD");
    if (!bias.empty() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0)))
        throw std::invalid_argument("linear_forward: bias must be K");
    Tensor y({x.dim(0), weight.dim(0)});
    kernels::linear_forward(x.data(), weight.data(), bias.empty() ? nullptr : bias.data(),
                            x.dim(0), x.dim(1), weight.dim(0), y.data());
    return y;
}

void linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dout, Tensor* dx,
                     Tensor* dweight, Tensor* dbias) {
    require_shape(dout, {x.dim(0), weight.dim(0)}, "linear_backward: dout");
    if (dx) require_shape(*dx, x.shape(), "linear_backward: dx");
    if (dweight) require_shape(*dweight, weight.shape(), "linear_backward: dweight");
    kernels::linear_backward(x.data(), weight.data(), dout.data(), x.dim(0), x.dim(1),
                             weight.dim(0), dx ? dx->data() : nullptr,
                             dweight ? dweight->data() : nullptr,
                             dbias ? dbias->data() : nullptr);
}

Tensor global_avg_pool_forward(const Tensor& x) {
    if (x.rank() != 4) throw std::invalid_argument("global_avg_pool: input must be 4-d");
    Tensor y({x.dim(0), x.dim(1)});
    kernels::global_avg_pool_forward(x.data(), x.dim(0), x.dim(1), x.dim(2), x.dim(3), y.data());
    return y;
}

Tensor global_avg_pool_backward(const Tensor& dout, int h, int w) {
    if (dout.rank() != 2) throw std::invalid_argument("global_avg_pool_backward: dout must be 2-d");
    Tensor dx({dout.dim(0), dout.dim(1), h, w});
    kernels::global_avg_pool_backward(dout.data(), dout.dim(0), dout.dim(1), h, w, dx.data());
    return dx;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) throw std::invalid_argument("softmax_cross_entropy: logits must be BxK");
    const int b = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != b)
        throw std::invalid_argument("softmax_cross_entropy: need one label per row");
    for (int i = 0; i < b; ++i)
        if (labels[static_cast<std::size_t>(i)] < 0 || labels[static_cast<std::size_t>(i)] >= k)
            throw std::invalid_argument("softmax_cross_entropy: label out of range [0, K)");

    LossResult r;
    r.dlogits = Tensor({b, k});
    double loss_sum = 0.0;
    const float inv_b = 1.0f / static_cast<float>(b);
    for (int i = 0; i < b; ++i) {
        const float* row = logits.data() + static_cast<std::int64_t>(i) * k;
        float* drow = r.dlogits.data() + static_cast<std::int64_t>(i) * k;
        float mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        float denom = 0.0f;
        for (int j = 0; j < k; ++j) {
            drow[j] = std::exp(row[j] - mx);
            denom += drow[j];
        }
        const int y = labels[static_cast<std::size_t>(i)];
        loss_sum += -(static_cast<double>(row[y] - mx) - std::log(static_cast<double>(denom)));
        const float inv_denom = 1.0f / denom;
        for (int j = 0; j < k; ++j) {
            float p = drow[j] * inv_denom;
            if (j == y) p -= 1.0f;
            drow[j] = p * inv_b;
        }
    }
    r.loss = static_cast<float>(loss_sum / b);
    return r;
}

Tensor l2_normalize(const Tensor& v) {
    Tensor out = v;
    double sq = 0.0;
    for (std::int64_t i = 0; i < v.numel(); ++i)
        sq += static_cast<double>(v[i]) * static_cast<double>(v[i]);
    const double norm = std::sqrt(sq);
    if (norm <= 1e-12) return out;
    const float inv = static_cast<float>(1.0 / norm);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= inv;
    return out;
}

void l2_normalize_rows(Tensor& m) {
    if (m.rank() != 2) throw std::invalid_argument("l2_normalize_rows: need a 2-d tensor");
    const int rows = m.dim(0), cols = m.dim(1);
    for (int r = 0; r < rows; ++r) {
        float* row = m.data() + static_cast<std::int64_t>(r) * cols;
        double sq = 0.0;
        for (int j = 0; j < cols; ++j) sq += static_cast<double>(row[j]) * row[j];
        const double norm = std::sqrt(sq);
        if (norm <= 1e-12) continue;
        const float inv = static_cast<float>(1.0 / norm);
        for (int j = 0; j < cols; ++j) row[j] *= inv;
    }
}

}  // namespace clr
