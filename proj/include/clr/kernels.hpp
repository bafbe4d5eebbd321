#pragma once

#include <cstdint>

namespace clr {

/// Validated geometry of one conv2d call (cross-correlation, NCHW layout).
struct ConvDims {
    int batch = 0;
    int in_ch = 0;
    int in_h = 0;
    int in_w = 0;
    int out_ch = 0;
    int kh = 0;
    int kw = 0;
    int stride = 1;
    int pad = 0;
    int out_h = 0;
    int out_w = 0;

    std::int64_t in_count() const {
        return static_cast<std::int64_t>(batch) * in_ch * in_h * in_w;
    }
    std::int64_t out_count() const {
        return static_cast<std::int64_t>(batch) * out_ch * out_h * out_w;
    }
    std::int64_t weight_count() const {
        return static_cast<std::int64_t>(out_ch) * in_ch * kh * kw;
    }
};

/// Computes output geometry; throws std::invalid_argument on bad stride/pad
/// or non-positive output dims.
ConvDims conv_dims(int batch, int in_ch, int in_h, int in_w, int out_ch, int kh, int kw,
                   int stride, int pad);

// Production kernels: im2col + single-threaded BLAS GEMM per image, with the
// batch loop parallelized by OpenMP. Every output element is accumulated
// inside exactly one deterministic GEMM call, so results are bit-identical
// for any thread count.
namespace kernels {

void conv2d_forward(const float* x, const float* w, const float* b, const ConvDims& d, float* y);
void conv2d_backward_input(const float* w, const float* dy, const ConvDims& d, float* dx);
/// Accumulates (+=) into dw and db.
void conv2d_backward_params(const float* x, const float* dy, const ConvDims& d, float* dw,
                            float* db);

void relu_forward(const float* x, float* y, std::int64_t n);
/// dx = dy where x > 0, else 0 (subgradient 0 at x == 0).
void relu_backward(const float* x, const float* dy, float* dx, std::int64_t n);

/// 2x2 max pool, stride 2, trailing odd row/col dropped. idx records the
/// winning flat input offset per output element (ties broken by first
/// position in row-major scan order).
void maxpool2x2_forward(const float* x, int batch, int ch, int h, int w, float* y,
                        std::int64_t* idx);
void maxpool2x2_backward(const std::int64_t* idx, const float* dy, std::int64_t out_n,
                         float* dx, std::int64_t in_n);

/// y[b,k] = sum_d x[b,d] * w[k,d] + bias[k]; x is batch x in_dim, w is
/// out_dim x in_dim.
void linear_forward(const float* x, const float* w, const float* b, int batch, int in_dim,
                    int out_dim, float* y);
void linear_backward(const float* x, const float* w, const float* dy, int batch, int in_dim,
                     int out_dim, float* dx, float* dw, float* db);

void global_avg_pool_forward(const float* x, int batch, int ch, int h, int w, float* y);
void global_avg_pool_backward(const float* dy, int batch, int ch, int h, int w, float* dx);

}  // namespace kernels

// Serial reference implementations: naive nested loops, no BLAS, no OpenMP.
// Kept as the independent oracle for the production kernels and as the
// baseline for the kernel benchmark. Never called on the production path.
namespace serial {

void conv2d_forward(const float* x, const float* w, const float* b, const ConvDims& d, float* y);
void conv2d_backward_input(const float* w, const float* dy, const ConvDims& d, float* dx);
void conv2d_backward_params(const float* x, const float* dy, const ConvDims& d, float* dw,
                            float* db);
void linear_forward(const float* x, const float* w, const float* b, int batch, int in_dim,
                    int out_dim, float* y);

}  // namespace serial

}  // namespace clr
