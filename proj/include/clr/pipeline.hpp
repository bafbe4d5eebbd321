#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clr/episode.hpp"
#include "clr/model.hpp"
#include "clr/replacement.hpp"

namespace clr {

struct TrainConfig {
    int epochs = 30;
    int batch = 64;
    float lr = 0.05f;
    float momentum = 0.9f;
    float weight_decay = 5e-4f;
    ReplacementMethod method = BlockAugParams{GridSpec{}, 4};
    bool regen_augmented_per_epoch = false;
    HeadKind head = HeadKind::Linear;  // throwaway training head
    BackboneConfig backbone;
};

enum class Variant { Vanilla, Otlr, ClrNoPl, ClrGt, Car, Clr };

Variant variant_from_string(const std::string& s);
const char* variant_name(Variant v);

struct FinetuneConfig {
    Variant variant = Variant::Clr;
    int epochs = 100;
    float lr = 0.01f;
    float momentum = 0.9f;
    int batch = 0;  // 0 = full training set per step
    ReplacementMethod method = BlockAugParams{GridSpec{}, 6};
    HeadKind head = HeadKind::Linear;
};

/// One synthesized image per original (labels preserved).
LabeledDataset build_augmented_trainset(const LabeledDataset& train,
                                        const ReplacementMethod& method, Rng& rng);

struct TrainResult {
    ModelState model;
    std::vector<float> epoch_losses;  // dataset-mean cross-entropy per epoch
};

/// Mini-batch SGD on the shuffled union of the train set and its augmented
/// version. The training head is discarded; only the backbone is returned.
TrainResult train_backbone(const LabeledDataset& train, const TrainConfig& config, Rng& rng);

/// Frozen-backbone features of every episode image, computed once per
/// episode and shared by all variants.
struct EpisodeFeatures {
    Tensor support;    // (n*k) x d
    Tensor query;      // (n*t) x d
    Tensor unlabeled;  // (n*u) x d; empty when u = 0
};
EpisodeFeatures compute_episode_features(const ModelState& model, const Episode& episode);

/// Argmax pseudo labels for unlabeled features (lowest index wins ties).
std::vector<int> pseudo_label(const Head& head, const Tensor& unlabeled_features);

/// Donor per support image: uniform among unlabeled images whose pool label
/// matches the support label, or -1 when no such image exists.
std::vector<int> select_sources(const Episode& episode, const std::vector<int>& pool_labels,
                                Rng& rng);

/// Donor per support image drawn uniformly from the whole unlabeled set.
std::vector<int> select_sources_uniform(const Episode& episode, Rng& rng);

/// Applies the replacement method per support image; donor -1 passes the
/// image through unchanged.
std::vector<ReplacementOutcome> synthesize_support(const Episode& episode,
                                                   const std::vector<int>& donors,
                                                   const ReplacementMethod& method, Rng& rng);

struct FinetuneEpochStats {
    float loss = 0.0f;                  // Eq. 2 mean loss this epoch
    std::optional<float> pl_accuracy;   // diagnostics only
    std::optional<float> query_accuracy;
};

struct FinetuneOptions {
    /// Bench diagnostics channel: reads hidden labels to score pseudo labels.
    bool record_pl_accuracy = false;
    bool record_query_accuracy = false;
};

struct FinetuneResult {
    Head head;
    std::vector<FinetuneEpochStats> epochs;
};

/// Algorithm: epoch 1 optimizes the head on the original support set; later
/// epochs rebuild the (variant-specific) training set and optimize on it.
/// The backbone is const throughout. The seed spawns independent streams for
/// head init, batch order and replacement, so variants that skip a stream
/// replay the rest identically.
FinetuneResult finetune(const ModelState& model, const Episode& episode,
                        const EpisodeFeatures& features, const FinetuneConfig& config,
                        std::uint64_t seed, const FinetuneOptions& options = {});
FinetuneResult finetune(const ModelState& model, const Episode& episode,
                        const FinetuneConfig& config, std::uint64_t seed,
                        const FinetuneOptions& options = {});

/// Fraction of the query set classified correctly.
double evaluate_episode(const ModelState& model, const Head& head, const Episode& episode);
double evaluate_episode(const Head& head, const Episode& episode,
                        const EpisodeFeatures& features);

}  // namespace clr
