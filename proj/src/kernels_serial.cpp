#include "clr/kernels.hpp"

#include <stdexcept>

namespace clr {

ConvDims conv_dims(int batch, int in_ch, int in_h, int in_w, int out_ch, int kh, int kw,
                   int stride, int pad) {
    if (batch <= 0 || in_ch <= 0 || in_h <= 0 || in_w <= 0 || out_ch <= 0 || kh <= 0 || kw <= 0)
        throw std::invalid_argument("conv_dims: non-positive dimension");
    if (stride < 1) throw std::invalid_argument("conv_dims: stride must be >= 1");
    if (pad < 0) throw std::invalid_argument("conv_dims: pad must be >= 0");
    ConvDims d;
    d.batch = batch;
    d.in_ch = in_ch;
    d.in_h = in_h;
    d.in_w = in_w;
    d.out_ch = out_ch;
    d.kh = kh;
    d.kw = kw;
    d.stride = stride;
    d.pad = pad;
    d.out_h = (in_h + 2 * pad - kh) / stride + 1;
    d.out_w = (in_w + 2 * pad - kw) / stride + 1;
    if (in_h + 2 * pad < kh || in_w + 2 * pad < kw || d.out_h <= 0 || d.out_w <= 0)
        throw std::invalid_argument("conv_dims: kernel larger than padded input");
    return d;
}

namespace serial {

void conv2d_forward(const float* x, const float* w, const float* b, const ConvDims& d, float* y) {
    for (int n = 0; n < d.batch; ++n)
        for (int co = 0; co < d.out_ch; ++co)
            for (int oy = 0; oy < d.out_h; ++oy)
                for (int ox = 0; ox < d.out_w; ++ox) {
                    float acc = b ? b[co] : 0.0f;
                    for (int ci = 0; ci < d.in_ch; ++ci)
                        for (int ky = 0; ky < d.kh; ++ky)
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const int iy = oy * d.stride + ky - d.pad;
                                const int ix = ox * d.stride + kx - d.pad;
                                if (iy < 0 || iy >= d.in_h || ix < 0 || ix >= d.in_w) continue;
                                const float xv =
                                    x[((static_cast<std::int64_t>(n) * d.in_ch + ci) * d.in_h + iy) *
                                          d.in_w +
                                      ix];
                                const float wv =
                                    w[((static_cast<std::int64_t>(co) * d.in_ch + ci) * d.kh + ky) *
                                          d.kw +
                                      kx];
                                acc += xv * wv;
                            }
                    y[((static_cast<std::int64_t>(n) * d.out_ch + co) * d.out_h + oy) * d.out_w +
                      ox] = acc;
                }
}

void conv2d_backward_input(const float* w, const float* dy, const ConvDims& d, float* dx) {
    for (std::int64_t i = 0; i < d.in_count(); ++i) dx[i] = 0.0f;
    for (int n = 0; n < d.batch; ++n)
        for (int co = 0; co < d.out_ch; ++co)
            for (int oy = 0; oy < d.out_h; ++oy)
                for (int ox = 0; ox < d.out_w; ++ox) {
                    const float g =
                        dy[((static_cast<std::int64_t>(n) * d.out_ch + co) * d.out_h + oy) *
                               d.out_w +
                           ox];
                    for (int ci = 0; ci < d.in_ch; ++ci)
                        for (int ky = 0; ky < d.kh; ++ky)
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const int iy = oy * d.stride + ky - d.pad;
                                const int ix = ox * d.stride + kx - d.pad;
                                if (iy < 0 || iy >= d.in_h || ix < 0 || ix >= d.in_w) continue;
                                dx[((static_cast<std::int64_t>(n) * d.in_ch + ci) * d.in_h + iy) *
                                       d.in_w +
                                   ix] +=
                                    g * w[((static_cast<std::int64_t>(co) * d.in_ch + ci) * d.kh +
                                           ky) *
                                              d.kw +
                                          kx];
                            }
                }
}

void conv2d_backward_params(const float* x, const float* dy, const ConvDims& d, float* dw,
                            float* db) {
    for (int n = 0; n < d.batch; ++n)
        for (int co = 0; co < d.out_ch; ++co)
            for (int oy = 0; oy < d.out_h; ++oy)
                for (int ox = 0; ox < d.out_w; ++ox) {
                    const float g =
                        dy[((static_cast<std::int64_t>(n) * d.out_ch + co) * d.out_h + oy) *
                               d.out_w +
                           ox];
                    if (db) db[co] += g;
                    for (int ci = 0; ci < d.in_ch; ++ci)
                        for (int ky = 0; ky < d.kh; ++ky)
                            for (int kx = 0; kx < d.kw; ++kx) {
                                const int iy = oy * d.stride + ky - d.pad;
                                const int ix = ox * d.stride + kx - d.pad;
                                if (iy < 0 || iy >= d.in_h || ix < 0 || ix >= d.in_w) continue;
                                dw[((static_cast<std::int64_t>(co) * d.in_ch + ci) * d.kh + ky) *
                                       d.kw +
                                   kx] +=
                                    g * x[((static_cast<std::int64_t>(n) * d.in_ch + ci) * d.in_h +
                                           iy) *
                                              d.in_w +
                                          ix];
                            }
                }
}

void linear_forward(const float* x, const float* w, const float* b, int batch, int in_dim,
                    int out_dim, float* y) {
    for (int n = 0; n < batch; ++n)
        for (int k = 0; k < out_dim; ++k) {
            float acc = b ? b[k] : 0.0f;
            for (int j = 0; j < in_dim; ++j)
                acc += x[static_cast<std::int64_t>(n) * in_dim + j] *
                       w[static_cast<std::int64_t>(k) * in_dim + j];
            y[static_cast<std::int64_t>(n) * out_dim + k] = acc;
        }
}

}  // namespace serial
}  // namespace clr
