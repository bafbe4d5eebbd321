#include "clr/kernels.hpp"

#include <algorithm>
#include <cblas.h>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

extern "C" void openblas_set_num_threads(int);

namespace clr::kernels {

namespace {

// BLAS calls run single-threaded; parallelism lives in the batch/episode
// loops. A GEMM then produces every output element in one deterministic
// accumulation order regardless of the OpenMP thread count.
void ensure_single_threaded_blas() {
    static const bool once = [] {
        openblas_set_num_threads(1);
        return true;
    }();
    (void)once;
}

thread_local std::vector<float> tl_col;

float* col_scratch(std::int64_t n) {
    if (static_cast<std::int64_t>(tl_col.size()) < n) tl_col.resize(static_cast<std::size_t>(n));
    return tl_col.data();
}

// Unfolds one image into a (in_ch*kh*kw) x (out_h*out_w) matrix.
void im2col(const float* x, const ConvDims& d, float* col) {
    const std::int64_t out_hw = static_cast<std::int64_t>(d.out_h) * d.out_w;
    for (int ci = 0; ci < d.in_ch; ++ci)
        for (int ky = 0; ky < d.kh; ++ky)
            for (int kx = 0; kx < d.kw; ++kx) {
                const std::int64_t r = (static_cast<std::int64_t>(ci) * d.kh + ky) * d.kw + kx;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    float* dst = col + r * out_hw + static_cast<std::int64_t>(oy) * d.out_w;
                    const int iy = oy * d.stride + ky - d.pad;
                    if (iy < 0 || iy >= d.in_h) {
                        std::memset(dst, 0, static_cast<std::size_t>(d.out_w) * sizeof(float));
                        continue;
                    }
                    const float* src = x + (static_cast<std::int64_t>(ci) * d.in_h + iy) * d.in_w;
                    if (d.stride == 1) {
                        const int ix0 = kx - d.pad;
                        const int lo = std::max(0, -ix0);
                        const int hi = std::min(d.out_w, d.in_w - ix0);
                        for (int ox = 0; ox < lo; ++ox) dst[ox] = 0.0f;
                        if (hi > lo)
                            std::memcpy(dst + lo, src + ix0 + lo,
                                        static_cast<std::size_t>(hi - lo) * sizeof(float));
                        for (int ox = std::max(lo, hi); ox < d.out_w; ++ox) dst[ox] = 0.0f;
                    } else {
                        for (int ox = 0; ox < d.out_w; ++ox) {
                            const int ix = ox * d.stride + kx - d.pad;
                            dst[ox] = (ix >= 0 && ix < d.in_w) ? src[ix] : 0.0f;
                        }
                    }
                }
            }
}

// Folds a column matrix back onto an image with += accumulation.
void col2im(const float* col, const ConvDims& d, float* x) {
    const std::int64_t out_hw = static_cast<std::int64_t>(d.out_h) * d.out_w;
    for (int ci = 0; ci < d.in_ch; ++ci)
        for (int ky = 0; ky < d.kh; ++ky)
            for (int kx = 0; kx < d.kw; ++kx) {
                const std::int64_t r = (static_cast<std::int64_t>(ci) * d.kh + ky) * d.kw + kx;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    const float* src = col + r * out_hw + static_cast<std::int64_t>(oy) * d.out_w;
                    const int iy = oy * d.stride + ky - d.pad;
                    if (iy < 0 || iy >= d.in_h) continue;
                    float* dst = x + (static_cast<std::int64_t>(ci) * d.in_h + iy) * d.in_w;
                    for (int ox = 0; ox < d.out_w; ++ox) {
                        const int ix = ox * d.stride + kx - d.pad;
                        if (ix >= 0 && ix < d.in_w) dst[ix] += src[ox];
                    }
                }
            }
}

}  // namespace

void conv2d_forward(const float* x, const float* w, const float* b, const ConvDims& d, float* y) {
    ensure_single_threaded_blas();
    const int ckk = d.in_ch * d.kh * d.kw;
    const std::int64_t out_hw = static_cast<std::int64_t>(d.out_h) * d.out_w;
    const std::int64_t in_n = static_cast<std::int64_t>(d.in_ch) * d.in_h * d.in_w;
    const std::int64_t out_n = static_cast<std::int64_t>(d.out_ch) * out_hw;

#pragma omp parallel for schedule(static)
    for (int n = 0; n < d.batch; ++n) {
        float* col = col_scratch(static_cast<std::int64_t>(ckk) * out_hw);
        im2col(x + n * in_n, d, col);
        float* yn = y + n * out_n;
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, d.out_ch,
                    static_cast<int>(out_hw), ckk, 1.0f, w, ckk, col, static_cast<int>(out_hw),
                    0.0f, yn, static_cast<int>(out_hw));
        if (b)
            for (int co = 0; co < d.out_ch; ++co) {
                float* row = yn + co * out_hw;
                const float bias = b[co];
                for (std::int64_t i = 0; i < out_hw; ++i) row[i] += bias;
            }
    }
}

void conv2d_backward_input(const float* w, const float* dy, const ConvDims& d, float* dx) {
    ensure_single_threaded_blas();
    const int ckk = d.in_ch * d.kh * d.kw;
    const std::int64_t out_hw = static_cast<std::int64_t>(d.out_h) * d.out_w;
    const std::int64_t in_n = static_cast<std::int64_t>(d.in_ch) * d.in_h * d.in_w;
    const std::int64_t out_n = static_cast<std::int64_t>(d.out_ch) * out_hw;

#pragma omp parallel for schedule(static)
    for (int n = 0; n < d.batch; ++n) {
        float* col = col_scratch(static_cast<std::int64_t>(ckk) * out_hw);
        // col = W^T * dy_n
        cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, ckk, static_cast<int>(out_hw),
                    d.out_ch, 1.0f, w, ckk, dy + n * out_n, static_cast<int>(out_hw), 0.0f, col,
                    static_cast<int>(out_hw));
        float* dxn = dx + n * in_n;
        std::memset(dxn, 0, static_cast<std::size_t>(in_n) * sizeof(float));
        col2im(col, d, dxn);
    }
}

void conv2d_backward_params(const float* x, const float* dy, const ConvDims& d, float* dw,
                            float* db) {
    ensure_single_threaded_blas();
    const int ckk = d.in_ch * d.kh * d.kw;
    const std::int64_t out_hw = static_cast<std::int64_t>(d.out_h) * d.out_w;
    const std::int64_t in_n = static_cast<std::int64_t>(d.in_ch) * d.in_h * d.in_w;
    const std::int64_t out_n = static_cast<std::int64_t>(d.out_ch) * out_hw;
    const std::int64_t wcount = d.weight_count();

    // Fixed chunking (independent of thread count) keeps the cross-batch
    // reduction order deterministic.
    const int chunks = std::min(d.batch, 8);
    std::vector<std::vector<float>> dw_part(static_cast<std::size_t>(chunks));
    std::vector<std::vector<float>> db_part(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static)
    for (int c = 0; c < chunks; ++c) {
        const int lo = static_cast<int>(static_cast<std::int64_t>(d.batch) * c / chunks);
        const int hi = static_cast<int>(static_cast<std::int64_t>(d.batch) * (c + 1) / chunks);
        auto& dwc = dw_part[static_cast<std::size_t>(c)];
        auto& dbc = db_part[static_cast<std::size_t>(c)];
        dwc.assign(static_cast<std::size_t>(wcount), 0.0f);
        dbc.assign(static_cast<std::size_t>(d.out_ch), 0.0f);
        float* col = col_scratch(static_cast<std::int64_t>(ckk) * out_hw);
        for (int n = lo; n < hi; ++n) {
            im2col(x + n * in_n, d, col);
            const float* dyn = dy + n * out_n;
            // dw_c += dy_n * col^T
            cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, d.out_ch, ckk,
                        static_cast<int>(out_hw), 1.0f, dyn, static_cast<int>(out_hw), col,
                        static_cast<int>(out_hw), 1.0f, dwc.data(), ckk);
            for (int co = 0; co < d.out_ch; ++co) {
                const float* row = dyn + co * out_hw;
                float acc = 0.0f;
                for (std::int64_t i = 0; i < out_hw; ++i) acc += row[i];
                dbc[static_cast<std::size_t>(co)] += acc;
            }
        }
    }

    for (int c = 0; c < chunks; ++c) {
        const auto& dwc = dw_part[static_cast<std::size_t>(c)];
        for (std::int64_t i = 0; i < wcount; ++i) dw[i] += dwc[static_cast<std::size_t>(i)];
        if (db) {
            const auto& dbc = db_part[static_cast<std::size_t>(c)];
            for (int co = 0; co < d.out_ch; ++co) db[co] += dbc[static_cast<std::size_t>(co)];
        }
    }
}

void relu_forward(const float* x, float* y, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n > 1 << 16)
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* dy, float* dx, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n > 1 << 16)
    for (std::int64_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void maxpool2x2_forward(const float* x, int batch, int ch, int h, int w, float* y,
                        std::int64_t* idx) {
    const int oh = h / 2;
    const int ow = w / 2;
    const std::int64_t planes = static_cast<std::int64_t>(batch) * ch;
#pragma omp parallel for schedule(static) if (planes * oh * ow > 1 << 14)
    for (std::int64_t p = 0; p < planes; ++p) {
        const float* xp = x + p * h * w;
        const std::int64_t base = p * h * w;
        float* yp = y + p * oh * ow;
        std::int64_t* ip = idx + p * oh * ow;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                const int iy = oy * 2;
                const int ix = ox * 2;
                // first position wins ties (row-major scan)
                std::int64_t best = static_cast<std::int64_t>(iy) * w + ix;
                float bv = xp[best];
                const std::int64_t cand[3] = {static_cast<std::int64_t>(iy) * w + ix + 1,
                                              (static_cast<std::int64_t>(iy) + 1) * w + ix,
                                              (static_cast<std::int64_t>(iy) + 1) * w + ix + 1};
                for (std::int64_t c : cand)
                    if (xp[c] > bv) {
                        bv = xp[c];
                        best = c;
                    }
                yp[static_cast<std::int64_t>(oy) * ow + ox] = bv;
                ip[static_cast<std::int64_t>(oy) * ow + ox] = base + best;
            }
    }
}

void maxpool2x2_backward(const std::int64_t* idx, const float* dy, std::int64_t out_n, float* dx,
                         std::int64_t in_n) {
    std::memset(dx, 0, static_cast<std::size_t>(in_n) * sizeof(float));
    // pool windows are disjoint, so the scatter below has no write conflicts
#pragma omp parallel for schedule(static) if (out_n > 1 << 16)
    for (std::int64_t i = 0; i < out_n; ++i) dx[idx[i]] += dy[i];
}

void linear_forward(const float* x, const float* w, const float* b, int batch, int in_dim,
                    int out_dim, float* y) {
    ensure_single_threaded_blas();
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, batch, out_dim, in_dim, 1.0f, x, in_dim,
                w, in_dim, 0.0f, y, out_dim);
    if (b)
        for (int n = 0; n < batch; ++n)
            for (int k = 0; k < out_dim; ++k) y[static_cast<std::int64_t>(n) * out_dim + k] += b[k];
}

void linear_backward(const float* x, const float* w, const float* dy, int batch, int in_dim,
                     int out_dim, float* dx, float* dw, float* db) {
    ensure_single_threaded_blas();
    if (dx)
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, batch, in_dim, out_dim, 1.0f, dy,
                    out_dim, w, in_dim, 0.0f, dx, in_dim);
    if (dw)
        cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, out_dim, in_dim, batch, 1.0f, dy,
                    out_dim, x, in_dim, 1.0f, dw, in_dim);
    if (db)
        for (int k = 0; k < out_dim; ++k) {
            float acc = 0.0f;
            for (int n = 0; n < batch; ++n) acc += dy[static_cast<std::int64_t>(n) * out_dim + k];
            db[k] += acc;
        }
}

void global_avg_pool_forward(const float* x, int batch, int ch, int h, int w, float* y) {
    const std::int64_t planes = static_cast<std::int64_t>(batch) * ch;
    const float inv = 1.0f / static_cast<float>(h * w);
#pragma omp parallel for schedule(static) if (planes * h * w > 1 << 16)
    for (std::int64_t p = 0; p < planes; ++p) {
        const float* xp = x + p * h * w;
        float acc = 0.0f;
        for (int i = 0; i < h * w; ++i) acc += xp[i];
        y[p] = acc * inv;
    }
}

void global_avg_pool_backward(const float* dy, int batch, int ch, int h, int w, float* dx) {
    const std::int64_t planes = static_cast<std::int64_t>(batch) * ch;
    const float inv = 1.0f / static_cast<float>(h * w);
#pragma omp parallel for schedule(static) if (planes * h * w > 1 << 16)
    for (std::int64_t p = 0; p < planes; ++p) {
        const float g = dy[p] * inv;
        float* dxp = dx + p * h * w;
        for (int i = 0; i < h * w; ++i) dxp[i] = g;
    }
}

}  // namespace clr::kernels
