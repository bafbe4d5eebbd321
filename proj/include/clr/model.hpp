#pragma once

#include <string>
#include <vector>

#include "clr/ops.hpp"
#include "clr/params.hpp"
#include "clr/rng.hpp"
#include "clr/tensor.hpp"

namespace clr {

/// Conv-N feature extractor geometry: N blocks of [kxk conv -> ReLU -> 2x2
/// max-pool], then global average pooling. Embedding dimension equals the
/// channel count.
struct BackboneConfig {
    int in_channels = 3;
    int input_side = 32;
    int conv_blocks = 4;
    int channels = 64;
    int kernel = 3;  // stride 1, pad kernel/2

    int embed_dim() const { return channels; }
    void validate() const;
};

class Backbone {
public:
    static Backbone init(const BackboneConfig& cfg, Rng& rng);
    static Backbone from_params(const BackboneConfig& cfg, ParamSet params);

    const BackboneConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    /// Forward pass to features (B x d). Thread-safe on a const backbone.
    Tensor embed(const Tensor& images) const;

    struct Cache {
        std::vector<Tensor> conv_in;
        std::vector<Tensor> conv_out;  // pre-ReLU
        std::vector<Tensor> relu_out;
        std::vector<PoolResult> pools;
    };
    Tensor embed_cached(const Tensor& images, Cache& cache) const;

    /// Accumulates parameter gradients for the cached forward pass.
    void backward(const Cache& cache, const Tensor& dfeatures);

private:
    Backbone() = default;
    BackboneConfig cfg_;
    ParamSet params_;
};

enum class HeadKind { Linear, Cosine };

HeadKind head_kind_from_string(const std::string& s);
const char* head_kind_name(HeadKind kind);

/// Classifier over embedded features: either Wf + b or
/// scale * cosine(f, row) on normalized operands.
class Head {
public:
    /// Weights ~ U(-1/sqrt(d), 1/sqrt(d)); linear bias 0; cosine scale 10.
    static Head create(HeadKind kind, int classes, int dim, Rng& rng);

    HeadKind kind() const { return kind_; }
    int classes() const { return classes_; }
    int dim() const { return dim_; }
    float scale() const { return scale_; }

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    Tensor logits(const Tensor& features) const;

    /// Accumulates head gradients; returns d(loss)/d(features) when
    /// want_dfeatures is set (needed only while the backbone trains).
    Tensor backward(const Tensor& features, const Tensor& dlogits, bool want_dfeatures);

    /// Cosine heads only: row c <- l2_normalize(mean of l2-normalized
    /// features labeled c). Throws if any class has no support feature.
    void imprint(const Tensor& features, const std::vector<int>& labels);

private:
    Head() = default;
    HeadKind kind_ = HeadKind::Linear;
    int classes_ = 0;
    int dim_ = 0;
    float scale_ = 10.0f;
    ParamSet params_;
};

/// Backbone plus the freeze flag of the fine-tune contract.
struct ModelState {
    Backbone backbone;
    bool frozen = false;
};

Tensor embed(const ModelState& model, const Tensor& images);
void freeze_backbone(ModelState& model);

/// Argmax class per row, ties broken by the lowest class index.
std::vector<int> argmax_rows(const Tensor& logits);
std::vector<int> predict(const ModelState& model, const Head& head, const Tensor& images);

/// Stacks CxHxW images into one BxCxHxW batch.
Tensor stack_images(const std::vector<const Tensor*>& images);

}  // namespace clr
