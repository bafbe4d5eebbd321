#include "clr/model.hpp"

#include <cmath>
#include <stdexcept>

namespace clr {

void BackboneConfig::validate() const {
    if (in_channels < 1 || channels < 1 || conv_blocks < 1 || kernel < 1 || input_side < 1)
        throw std::invalid_argument("BackboneConfig: non-positive field");
    int side = input_side;
    for (int i = 0; i < conv_blocks; ++i) {
        if (side < 2)
            throw std::invalid_argument(
                "BackboneConfig: input side too small for the pooling plan");
        side /= 2;
    }
}

Backbone Backbone::init(const BackboneConfig& cfg, Rng& rng) {
    cfg.validate();
    Backbone b;
    b.cfg_ = cfg;
    for (int i = 0; i < cfg.conv_blocks; ++i) {
        const int in_ch = i == 0 ? cfg.in_channels : cfg.channels;
        const int fan_in = in_ch * cfg.kernel * cfg.kernel;
        const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
        Tensor w({cfg.channels, in_ch, cfg.kernel, cfg.kernel});
        for (std::int64_t j = 0; j < w.numel(); ++j)
            w[j] = static_cast<float>(rng.uniform_range(-bound, bound));
        const std::string stem = "conv" + std::to_string(i + 1);
        b.params_.add(stem + ".w", std::move(w));
        b.params_.add(stem + ".b", Tensor({cfg.channels}));
    }
    return b;
}

Backbone Backbone::from_params(const BackboneConfig& cfg, ParamSet params) {
    cfg.validate();
    Backbone b;
    b.cfg_ = cfg;
    b.params_ = std::move(params);
    for (int i = 0; i < cfg.conv_blocks; ++i) {
        const std::string stem = "conv" + std::to_string(i + 1);
        const int in_ch = i == 0 ? cfg.in_channels : cfg.channels;
        require_shape(b.params_.at(stem + ".w").value,
                      {cfg.channels, in_ch, cfg.kernel, cfg.kernel}, "backbone weight");
        require_shape(b.params_.at(stem + ".b").value, {cfg.channels}, "backbone bias");
    }
    return b;
}

Tensor Backbone::embed(const Tensor& images) const {
    Cache scratch;
    return embed_cached(images, scratch);
}

Tensor Backbone::embed_cached(const Tensor& images, Cache& cache) const {
    if (images.rank() != 4 || images.dim(1) != cfg_.in_channels ||
        images.dim(2) != cfg_.input_side || images.dim(3) != cfg_.input_side)
        throw std::invalid_argument("Backbone::embed: images must be Bx" +
                                    std::to_string(cfg_.in_channels) + "x" +
                                    std::to_string(cfg_.input_side) + "x" +
                                    std::to_string(cfg_.input_side) + ", got " +
                                    images.shape_string());
    cache = Cache{};
    const int pad = cfg_.kernel / 2;
    Tensor x = images;
    for (int i = 0; i < cfg_.conv_blocks; ++i) {
        const std::string stem = "conv" + std::to_string(i + 1);
        cache.conv_in.push_back(x);
        Tensor pre = conv2d_forward(x, params_.at(stem + ".w").value, params_.at(stem + ".b").value,
                                    1, pad);
        Tensor post = relu_forward(pre);
        cache.conv_out.push_back(std::move(pre));
        cache.pools.push_back(maxpool2x2_forward(post));
        cache.relu_out.push_back(std::move(post));
        x = cache.pools.back().output;
    }
    return global_avg_pool_forward(x);
}

void Backbone::backward(const Cache& cache, const Tensor& dfeatures) {
    if (static_cast<int>(cache.pools.size()) != cfg_.conv_blocks)
        throw std::invalid_argument("Backbone::backward: cache does not match this forward pass");
    const int pad = cfg_.kernel / 2;
    const Tensor& last = cache.pools.back().output;
    Tensor dx = global_avg_pool_backward(dfeatures, last.dim(2), last.dim(3));
    for (int i = cfg_.conv_blocks - 1; i >= 0; --i) {
        const std::string stem = "conv" + std::to_string(i + 1);
        const auto& pool = cache.pools[static_cast<std::size_t>(i)];
        Tensor dpost =
            maxpool2x2_backward(pool, dx, cache.relu_out[static_cast<std::size_t>(i)].shape());
        Tensor dpre = relu_backward(cache.conv_out[static_cast<std::size_t>(i)], dpost);
        auto& w = params_.at(stem + ".w");
        auto& b = params_.at(stem + ".b");
        const Tensor& input = cache.conv_in[static_cast<std::size_t>(i)];
        if (i > 0) {
            Tensor dinput(input.shape());
            conv2d_backward(input, w.value, dpre, 1, pad, &dinput, &w.grad, &b.grad);
            dx = std::move(dinput);
        } else {
            conv2d_backward(input, w.value, dpre, 1, pad, nullptr, &w.grad, &b.grad);
        }
    }
}

HeadKind head_kind_from_string(const std::string& s) {
    if (s == "linear") return HeadKind::Linear;
    if (s == "cosine-imprint" || s == "cosine") return HeadKind::Cosine;
    throw std::invalid_argument("unknown head kind: " + s + " (want linear|cosine-imprint)");
}

const char* head_kind_name(HeadKind kind) {
    return kind == HeadKind::Linear ? "linear" : "cosine-imprint";
}

Head Head::create(HeadKind kind, int classes, int dim, Rng& rng) {
    if (classes < 1 || dim < 1) throw std::invalid_argument("Head::create: K and d must be positive");
    Head h;
    h.kind_ = kind;
    h.classes_ = classes;
    h.dim_ = dim;
    const float bound = 1.0f / std::sqrt(static_cast<float>(dim));
    Tensor w({classes, dim});
    for (std::int64_t i = 0; i < w.numel(); ++i)
        w[i] = static_cast<float>(rng.uniform_range(-bound, bound));
    h.params_.add("W", std::move(w));
    if (kind == HeadKind::Linear) h.params_.add("b", Tensor({classes}));
    return h;
}

Tensor Head::logits(const Tensor& features) const {
    if (features.rank() != 2 || features.dim(1) != dim_)
        throw std::invalid_argument("Head::logits: features must be Bx" + std::to_string(dim_));
    const Tensor& w = params_.at("W").value;
    if (kind_ == HeadKind::Linear) return linear_forward(features, w, params_.at("b").value);
    Tensor u = features;
    l2_normalize_rows(u);
    Tensor v = w;
    l2_normalize_rows(v);
    Tensor out = linear_forward(u, v, Tensor());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= scale_;
    return out;
}

Tensor Head::backward(const Tensor& features, const Tensor& dlogits, bool want_dfeatures) {
    auto& wp = params_.at("W");
    if (kind_ == HeadKind::Linear) {
        Tensor dfeat;
        if (want_dfeatures) dfeat = Tensor(features.shape());
        linear_backward(features, wp.value, dlogits, want_dfeatures ? &dfeat : nullptr, &wp.grad,
                        &params_.at("b").grad);
        return dfeat;
    }

    // cosine: logits = scale * U V^T with U, V row-normalized copies
    const int batch = features.dim(0);
    Tensor u = features;
    l2_normalize_rows(u);
    Tensor v = wp.value;
    l2_normalize_rows(v);

    Tensor g = dlogits;  // scaled upstream
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] *= scale_;

    // dU = g V, dV = g^T U
    Tensor du({batch, dim_});
    linear_backward(u, v, g, &du, nullptr, nullptr);
    Tensor dv({classes_, dim_});
    kernels::linear_backward(u.data(), nullptr, g.data(), batch, dim_, classes_, nullptr,
                             dv.data(), nullptr);

    // pull dV back through the row normalization of W
    for (int r = 0; r < classes_; ++r) {
        const float* wrow = wp.value.data() + static_cast<std::int64_t>(r) * dim_;
        const float* vrow = v.data() + static_cast<std::int64_t>(r) * dim_;
        float* dvrow = dv.data() + static_cast<std::int64_t>(r) * dim_;
        float* grow = wp.grad.data() + static_cast<std::int64_t>(r) * dim_;
        double sq = 0.0;
        for (int j = 0; j < dim_; ++j) sq += static_cast<double>(wrow[j]) * wrow[j];
        const double norm = std::sqrt(sq);
        if (norm <= 1e-12) {
            for (int j = 0; j < dim_; ++j) grow[j] += dvrow[j];
            continue;
        }
        double dot = 0.0;
        for (int j = 0; j < dim_; ++j) dot += static_cast<double>(vrow[j]) * dvrow[j];
        const float inv = static_cast<float>(1.0 / norm);
        for (int j = 0; j < dim_; ++j)
            grow[j] += (dvrow[j] - static_cast<float>(dot) * vrow[j]) * inv;
    }

    Tensor dfeat;
    if (want_dfeatures) {
        dfeat = Tensor(features.shape());
        for (int r = 0; r < batch; ++r) {
            const float* frow = features.data() + static_cast<std::int64_t>(r) * dim_;
            const float* urow = u.data() + static_cast<std::int64_t>(r) * dim_;
            const float* durow = du.data() + static_cast<std::int64_t>(r) * dim_;
            float* out = dfeat.data() + static_cast<std::int64_t>(r) * dim_;
            double sq = 0.0;
            for (int j = 0; j < dim_; ++j) sq += static_cast<double>(frow[j]) * frow[j];
            const double norm = std::sqrt(sq);
            if (norm <= 1e-12) {
                for (int j = 0; j < dim_; ++j) out[j] = durow[j];
                continue;
            }
            double dot = 0.0;
            for (int j = 0; j < dim_; ++j) dot += static_cast<double>(urow[j]) * durow[j];
            const float inv = static_cast<float>(1.0 / norm);
            for (int j = 0; j < dim_; ++j)
                out[j] = (durow[j] - static_cast<float>(dot) * urow[j]) * inv;
        }
    }
    return dfeat;
}

void Head::imprint(const Tensor& features, const std::vector<int>& labels) {
    if (kind_ != HeadKind::Cosine)
        throw std::invalid_argument("Head::imprint: only cosine heads support imprinting");
    if (features.rank() != 2 || features.dim(1) != dim_ ||
        features.dim(0) != static_cast<int>(labels.size()))
        throw std::invalid_argument("Head::imprint: features/labels shape mismatch");

    Tensor normalized = features;
    l2_normalize_rows(normalized);
    Tensor rows({classes_, dim_});
    std::vector<int> counts(static_cast<std::size_t>(classes_), 0);
    for (int i = 0; i < features.dim(0); ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        if (c < 0 || c >= classes_)
            throw std::invalid_argument("Head::imprint: label out of range");
        ++counts[static_cast<std::size_t>(c)];
        const float* src = normalized.data() + static_cast<std::int64_t>(i) * dim_;
        float* dst = rows.data() + static_cast<std::int64_t>(c) * dim_;
        for (int j = 0; j < dim_; ++j) dst[j] += src[j];
    }
    for (int c = 0; c < classes_; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0)
            throw std::invalid_argument("Head::imprint: class " + std::to_string(c) +
                                        " has no support feature");
        float* row = rows.data() + static_cast<std::int64_t>(c) * dim_;
        const float inv = 1.0f / static_cast<float>(counts[static_cast<std::size_t>(c)]);
        for (int j = 0; j < dim_; ++j) row[j] *= inv;
    }
    l2_normalize_rows(rows);
    params_.at("W").value = std::move(rows);
}

Tensor embed(const ModelState& model, const Tensor& images) {
    return model.backbone.embed(images);
}

void freeze_backbone(ModelState& model) { model.frozen = true; }

std::vector<int> argmax_rows(const Tensor& logits) {
    const int rows = logits.dim(0), cols = logits.dim(1);
    std::vector<int> out(static_cast<std::size_t>(rows));
    for (int r = 0; r < rows; ++r) {
        const float* row = logits.data() + static_cast<std::int64_t>(r) * cols;
        int best = 0;
        for (int c = 1; c < cols; ++c)
            if (row[c] > row[best]) best = c;
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

std::vector<int> predict(const ModelState& model, const Head& head, const Tensor& images) {
    return argmax_rows(head.logits(embed(model, images)));
}

Tensor stack_images(const std::vector<const Tensor*>& images) {
    if (images.empty()) throw std::invalid_argument("stack_images: empty batch");
    const auto& shape = images.front()->shape();
    std::vector<int> out_shape = {static_cast<int>(images.size())};
    out_shape.insert(out_shape.end(), shape.begin(), shape.end());
    Tensor out(out_shape);
    const std::int64_t stride = images.front()->numel();
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i]->shape() != shape)
            throw std::invalid_argument("stack_images: inconsistent image shapes");
        std::copy(images[i]->data(), images[i]->data() + stride,
                  out.data() + static_cast<std::int64_t>(i) * stride);
    }
    return out;
}

}  // namespace clr
