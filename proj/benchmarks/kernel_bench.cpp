// Compares the serial reference kernels against the parallel production
// kernels at the Conv-4 layer shapes, plus end-to-end embedding throughput.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "clr/kernels.hpp"
#include "clr/model.hpp"
#include "clr/rng.hpp"

using namespace clr;

namespace {

double seconds_per_call(const std::function<void()>& fn, double min_time = 0.4) {
    fn();  // warm up
    int reps = 1;
    while (true) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < reps; ++i) fn();
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (s >= min_time) return s / reps;
        reps *= 2;
    }
}

void fill_random(std::vector<float>& v, Rng& rng) {
    for (auto& x : v) x = rng.uniform_float() - 0.5f;
}

void bench_conv(int batch, int in_ch, int side, int out_ch) {
    const ConvDims d = conv_dims(batch, in_ch, side, side, out_ch, 3, 3, 1, 1);
    Rng rng(42);
    std::vector<float> x(static_cast<std::size_t>(d.in_count()));
    std::vector<float> w(static_cast<std::size_t>(d.weight_count()));
    std::vector<float> b(static_cast<std::size_t>(d.out_ch));
    std::vector<float> y(static_cast<std::size_t>(d.out_count()));
    std::vector<float> dy(static_cast<std::size_t>(d.out_count()));
    std::vector<float> dx(static_cast<std::size_t>(d.in_count()));
    std::vector<float> dw(static_cast<std::size_t>(d.weight_count()));
    std::vector<float> db(static_cast<std::size_t>(d.out_ch));
    fill_random(x, rng);
    fill_random(w, rng);
    fill_random(b, rng);
    fill_random(dy, rng);

    const double flops_fwd = 2.0 * d.out_count() * d.in_ch * d.kh * d.kw;

    const double serial_fwd = seconds_per_call(
        [&] { serial::conv2d_forward(x.data(), w.data(), b.data(), d, y.data()); });
    const double par_fwd = seconds_per_call(
        [&] { kernels::conv2d_forward(x.data(), w.data(), b.data(), d, y.data()); });
    const double par_bwd = seconds_per_call([&] {
        kernels::conv2d_backward_input(w.data(), dy.data(), d, dx.data());
        kernels::conv2d_backward_params(x.data(), dy.data(), d, dw.data(), db.data());
    });

    std::printf("conv %dx%dx%dx%d -> %d ch | serial fwd %8.2f ms (%5.1f GF/s) | "
                "parallel fwd %7.2f ms (%5.1f GF/s, %.1fx) | parallel bwd %7.2f ms\n",
                batch, in_ch, side, side, out_ch, serial_fwd * 1e3, flops_fwd / serial_fwd / 1e9,
                par_fwd * 1e3, flops_fwd / par_fwd / 1e9, serial_fwd / par_fwd, par_bwd * 1e3);
}

void bench_embed() {
    BackboneConfig cfg;
    Rng rng(7);
    const Backbone backbone = Backbone::init(cfg, rng);
    const int batch = 64;
    Tensor images({batch, cfg.in_channels, cfg.input_side, cfg.input_side});
    for (std::int64_t i = 0; i < images.numel(); ++i) images[i] = rng.uniform_float();

    const double s = seconds_per_call([&] { (void)backbone.embed(images); });
    std::printf("backbone embed, batch %d: %.2f ms (%.0f images/s)\n", batch, s * 1e3, batch / s);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#endif
    bench_conv(64, 3, 32, 64);
    bench_conv(64, 64, 16, 64);
    bench_conv(64, 64, 8, 64);
    bench_conv(64, 64, 4, 64);
    std::printf("\n");
    bench_embed();
    return 0;
}
