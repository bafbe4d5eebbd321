#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "clr/checkpoint.hpp"
#include "clr/kernels.hpp"
#include "clr/ops.hpp"
#include "clr/params.hpp"
#include "clr/rng.hpp"

using namespace clr;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(rng.uniform_range(lo, hi));
    return t;
}

// 64-bit reference for the cross-entropy formula.
double reference_ce(const Tensor& logits, const std::vector<int>& labels) {
    const int b = logits.dim(0), k = logits.dim(1);
    double total = 0.0;
    for (int i = 0; i < b; ++i) {
        double mx = logits[i * k];
        for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(logits[i * k + j]));
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(static_cast<double>(logits[i * k + j]) - mx);
        total += -(static_cast<double>(logits[i * k + labels[static_cast<std::size_t>(i)]]) - mx -
                   std::log(denom));
    }
    return total / b;
}

}  // namespace

TEST_CASE("conv2d identity kernel returns the input") {
    Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor w({1, 1, 1, 1}, {1.0f});
    Tensor b({1});
    const Tensor y = conv2d_forward(x, w, b, 1, 0);
    CHECK(y.bit_equal(x));
}

TEST_CASE("conv2d zero weights give a constant bias plane") {
    Rng rng(1);
    const Tensor x = random_tensor({2, 3, 5, 7}, rng);
    Tensor w({4, 3, 3, 3});
    Tensor b({4}, {0.5f, -1.0f, 0.0f, 2.0f});
    const Tensor y = conv2d_forward(x, w, b, 1, 1);
    for (int n = 0; n < 2; ++n)
        for (int co = 0; co < 4; ++co)
            for (int i = 0; i < 5 * 7; ++i)
                CHECK(y[((n * 4 + co) * 5 * 7) + i] == b[co]);
}

TEST_CASE("conv2d matches the naive serial reference") {
    Rng rng(7);
    const Tensor x = random_tensor({2, 3, 8, 8}, rng);
    const Tensor w = random_tensor({4, 3, 3, 3}, rng);
    const Tensor b = random_tensor({4}, rng);
    const Tensor y = conv2d_forward(x, w, b, 1, 0);
    const ConvDims d = conv_dims(2, 3, 8, 8, 4, 3, 3, 1, 0);
    Tensor ref({d.batch, d.out_ch, d.out_h, d.out_w});
    serial::conv2d_forward(x.data(), w.data(), b.data(), d, ref.data());
    for (std::int64_t i = 0; i < y.numel(); ++i)
        CHECK(std::abs(y[i] - ref[i]) <= 1e-5f);
}

TEST_CASE("conv2d stride and pad geometry, including error paths") {
    const ConvDims d = conv_dims(1, 1, 7, 7, 1, 3, 3, 2, 1);
    CHECK(d.out_h == 4);
    CHECK(d.out_w == 4);
    CHECK_THROWS_AS(conv_dims(1, 1, 2, 2, 1, 5, 5, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(conv_dims(1, 1, 4, 4, 1, 3, 3, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(conv_dims(1, 1, 4, 4, 1, 3, 3, 1, -1), std::invalid_argument);

    Rng rng(3);
    const Tensor x = random_tensor({1, 2, 6, 6}, rng);
    const Tensor w_bad = random_tensor({1, 3, 3, 3}, rng);
    CHECK_THROWS_AS(conv2d_forward(x, w_bad, Tensor(), 1, 0), std::invalid_argument);
}

TEST_CASE("conv2d forward is bit-deterministic") {
    Rng rng(11);
    const Tensor x = random_tensor({3, 4, 16, 16}, rng);
    const Tensor w = random_tensor({8, 4, 3, 3}, rng);
    const Tensor b = random_tensor({8}, rng);
    const Tensor y1 = conv2d_forward(x, w, b, 1, 1);
    const Tensor y2 = conv2d_forward(x, w, b, 1, 1);
    CHECK(y1.bit_equal(y2));
}

TEST_CASE("relu subgradient at zero is zero") {
    Tensor x({1, 4}, {-1.0f, 0.0f, 0.5f, 2.0f});
    Tensor dy({1, 4}, {10.0f, 10.0f, 10.0f, 10.0f});
    const Tensor dx = relu_backward(x, dy);
    CHECK(dx[0] == 0.0f);
    CHECK(dx[1] == 0.0f);  // the chosen convention at exactly 0
    CHECK(dx[2] == 10.0f);
    CHECK(dx[3] == 10.0f);
}

TEST_CASE("maxpool ties route to the first position in scan order") {
    Tensor x({1, 1, 2, 2}, {3.0f, 3.0f, 3.0f, 3.0f});
    const PoolResult r = maxpool2x2_forward(x);
    CHECK(r.output[0] == 3.0f);
    CHECK(r.argmax[0] == 0);

    Tensor dy({1, 1, 1, 1}, {5.0f});
    const Tensor dx = maxpool2x2_backward(r, dy, {1, 1, 2, 2});
    CHECK(dx[0] == 5.0f);
    CHECK(dx[1] == 0.0f);
    CHECK(dx[2] == 0.0f);
    CHECK(dx[3] == 0.0f);
}

TEST_CASE("maxpool drops trailing odd rows and columns") {
    Rng rng(5);
    const Tensor x = random_tensor({1, 1, 5, 5}, rng);
    const PoolResult r = maxpool2x2_forward(x);
    CHECK(r.output.dim(2) == 2);
    CHECK(r.output.dim(3) == 2);
}

TEST_CASE("linear bias gradient equals the upstream gradient summed over the batch") {
    Rng rng(9);
    const Tensor x = random_tensor({4, 6}, rng);
    const Tensor w = random_tensor({3, 6}, rng);
    const Tensor dy = random_tensor({4, 3}, rng);
    Tensor dw({3, 6}), db({3});
    linear_backward(x, w, dy, nullptr, &dw, &db);
    for (int k = 0; k < 3; ++k) {
        float want = 0.0f;
        for (int n = 0; n < 4; ++n) want += dy[n * 3 + k];
        CHECK(db[k] == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("softmax cross entropy on uniform logits is ln K") {
    Tensor logits({2, 5}, std::vector<float>(10, 0.7f));
    const LossResult r = softmax_cross_entropy(logits, {0, 3});
    CHECK(r.loss == doctest::Approx(std::log(5.0)).epsilon(1e-6));
}

TEST_CASE("softmax cross entropy saturates to zero on a confident correct logit") {
    Tensor logits({1, 4}, {1e4f, 0.0f, 0.0f, 0.0f});
    const LossResult r = softmax_cross_entropy(logits, {0});
    CHECK(r.loss >= 0.0f);
    CHECK(r.loss < 1e-6f);
}

TEST_CASE("softmax cross entropy matches the 64-bit reference") {
    Rng rng(13);
    const Tensor logits = random_tensor({4, 3}, rng, -3.0f, 3.0f);
    const std::vector<int> labels = {2, 0, 1, 1};
    const LossResult r = softmax_cross_entropy(logits, labels);
    CHECK(std::abs(static_cast<double>(r.loss) - reference_ce(logits, labels)) <= 1e-6);
}

TEST_CASE("softmax cross entropy properties: positivity and zero-sum gradient rows") {
    Rng rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        const int b = 1 + rng.uniform_int(6);
        const int k = 2 + rng.uniform_int(7);
        const Tensor logits = random_tensor({b, k}, rng, -5.0f, 5.0f);
        std::vector<int> labels(static_cast<std::size_t>(b));
        for (auto& l : labels) l = rng.uniform_int(k);
        const LossResult r = softmax_cross_entropy(logits, labels);
        CHECK(r.loss >= 0.0f);
        for (int i = 0; i < b; ++i) {
            float row_sum = 0.0f;
            for (int j = 0; j < k; ++j) row_sum += r.dlogits[i * k + j];
            CHECK(std::abs(row_sum) <= 1e-6f);
        }
    }
}

TEST_CASE("softmax cross entropy rejects out-of-range labels") {
    Tensor logits({1, 3});
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {3}), std::invalid_argument);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {-1}), std::invalid_argument);
}

TEST_CASE("sgd with lr 0 leaves parameters unchanged") {
    ParamSet p;
    Rng rng(19);
    p.add("w", random_tensor({3, 3}, rng));
    const Tensor before = p.at("w").value;
    for (std::int64_t i = 0; i < p.at("w").grad.numel(); ++i) p.at("w").grad[i] = 1.5f;
    sgd_step(p, 0.0f, 0.9f, 5e-4f);
    CHECK(p.at("w").value.bit_equal(before));
}

TEST_CASE("plain sgd step is param minus lr times grad") {
    ParamSet p;
    p.add("w", Tensor({2}, {1.0f, -2.0f}));
    p.at("w").grad = Tensor({2}, {0.5f, 0.25f});
    sgd_step(p, 0.1f, 0.0f, 0.0f);
    CHECK(p.at("w").value[0] == doctest::Approx(1.0f - 0.1f * 0.5f));
    CHECK(p.at("w").value[1] == doctest::Approx(-2.0f - 0.1f * 0.25f));
    // gradients zeroed afterwards
    CHECK(p.at("w").grad[0] == 0.0f);
    CHECK(p.at("w").grad[1] == 0.0f);
}

TEST_CASE("two momentum steps on a constant gradient displace by lr*g*(1 + 1.9)") {
    // v1 = g, v2 = 0.9 g + g = 1.9 g; total displacement lr*g*2.9
    ParamSet p;
    p.add("w", Tensor({1}, {0.0f}));
    const float lr = 0.1f, g = 2.0f;
    for (int step = 0; step < 2; ++step) {
        p.at("w").grad[0] = g;
        sgd_step(p, lr, 0.9f, 0.0f);
    }
    CHECK(p.at("w").value[0] == doctest::Approx(-lr * g * 2.9f).epsilon(1e-6));
}

TEST_CASE("l2_normalize on the 3-4-5 triangle") {
    const Tensor v({2}, {3.0f, 4.0f});
    const Tensor n = l2_normalize(v);
    CHECK(n[0] == doctest::Approx(0.6f).epsilon(1e-6));
    CHECK(n[1] == doctest::Approx(0.8f).epsilon(1e-6));
}

TEST_CASE("l2_normalize is idempotent on unit vectors and passes zero through") {
    const Tensor unit({2}, {0.6f, 0.8f});
    const Tensor again = l2_normalize(unit);
    CHECK(again[0] == doctest::Approx(0.6f).epsilon(1e-6));
    CHECK(again[1] == doctest::Approx(0.8f).epsilon(1e-6));

    const Tensor zero({3});
    CHECK(l2_normalize(zero).bit_equal(zero));
}

TEST_CASE("checkpoint round-trips parameters bit-exactly") {
    Rng rng(23);
    ParamSet p;
    p.add("conv1.w", random_tensor({4, 3, 3, 3}, rng));
    p.add("conv1.b", random_tensor({4}, rng));
    p.add("head.W", random_tensor({5, 16}, rng));

    const auto path = std::filesystem::temp_directory_path() / "clr_ckpt_test.bin";
    save_checkpoint(p, path.string());
    const ParamSet loaded = load_checkpoint(path.string());

    REQUIRE(loaded.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(loaded[i].name == p[i].name);
        CHECK(loaded[i].value.bit_equal(p[i].value));
    }
    CHECK(checksum(loaded) == checksum(p));
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects files without the magic") {
    const auto path = std::filesystem::temp_directory_path() / "clr_ckpt_bad.bin";
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("not a checkpoint", f);
    std::fclose(f);
    CHECK_THROWS_AS(load_checkpoint(path.string()), std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("serial and parallel linear kernels agree") {
    Rng rng(29);
    const Tensor x = random_tensor({5, 12}, rng);
    const Tensor w = random_tensor({7, 12}, rng);
    const Tensor b = random_tensor({7}, rng);
    const Tensor y = linear_forward(x, w, b);
    Tensor ref({5, 7});
    serial::linear_forward(x.data(), w.data(), b.data(), 5, 12, 7, ref.data());
    for (std::int64_t i = 0; i < y.numel(); ++i)
        CHECK(std::abs(y[i] - ref[i]) <= 1e-5f);
}
