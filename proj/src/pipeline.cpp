#include "clr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace clr {

Variant variant_from_string(const std::string& s) {
    if (s == "Vanilla" || s == "vanilla") return Variant::Vanilla;
    if (s == "OTLR" || s == "otlr") return Variant::Otlr;
    if (s == "CLR_no_PL" || s == "clr_no_pl") return Variant::ClrNoPl;
    if (s == "CLR_GT" || s == "clr_gt") return Variant::ClrGt;
    if (s == "CAR" || s == "car") return Variant::Car;
    if (s == "CLR" || s == "clr") return Variant::Clr;
    throw std::invalid_argument("unknown variant: " + s +
                                " (want Vanilla|OTLR|CLR_no_PL|CLR_GT|CAR|CLR)");
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Vanilla: return "Vanilla";
        case Variant::Otlr: return "OTLR";
        case Variant::ClrNoPl: return "CLR_no_PL";
        case Variant::ClrGt: return "CLR_GT";
        case Variant::Car: return "CAR";
        case Variant::Clr: return "CLR";
    }
    return "?";
}

LabeledDataset build_augmented_trainset(const LabeledDataset& train,
                                        const ReplacementMethod& method, Rng& rng) {
    std::vector<ImageSample> synth;
    synth.reserve(static_cast<std::size_t>(train.size()));
    for (const auto& s : train.samples()) {
        auto outcome = synthesize_training_image(s, train, method, rng);
        ImageSample t;
        t.id = s.id;
        t.label = s.label;
        t.pixels = std::move(outcome.image);
        synth.push_back(std::move(t));
    }
    return LabeledDataset(std::move(synth), train.role());
}

namespace {

std::map<int, int> contiguous_label_map(const LabeledDataset& ds) {
    std::map<int, int> m;
    int next = 0;
    for (int c : ds.classes()) m[c] = next++;
    return m;
}

}  // namespace

TrainResult train_backbone(const LabeledDataset& train, const TrainConfig& config, Rng& rng) {
    if (train.classes().size() < 2)
        throw std::invalid_argument("train_backbone: need at least 2 training classes");
    validate_method(config.method);

    const auto label_map = contiguous_label_map(train);
    const int num_classes = static_cast<int>(label_map.size());

    TrainResult result;
    result.model.backbone = Backbone::init(config.backbone, rng);
    Head head = Head::create(config.head, num_classes, config.backbone.embed_dim(), rng);

    LabeledDataset augmented = build_augmented_trainset(train, config.method, rng);

    const int n = train.size();
    std::vector<int> order(static_cast<std::size_t>(2 * n));
    const int batch_size = config.batch > 0 ? config.batch : 2 * n;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.regen_augmented_per_epoch && epoch > 0)
            augmented = build_augmented_trainset(train, config.method, rng);
        // union of originals [0, n) and synthesized copies [n, 2n)
        for (int i = 0; i < 2 * n; ++i) order[static_cast<std::size_t>(i)] = i;
        rng.shuffle(order);

        double loss_sum = 0.0;
        for (int start = 0; start < 2 * n; start += batch_size) {
            const int count = std::min(batch_size, 2 * n - start);
            std::vector<const Tensor*> images(static_cast<std::size_t>(count));
            std::vector<int> labels(static_cast<std::size_t>(count));
            for (int i = 0; i < count; ++i) {
                const int idx = order[static_cast<std::size_t>(start + i)];
                const ImageSample& s =
                    idx < n ? train.sample(idx) : augmented.sample(idx - n);
                images[static_cast<std::size_t>(i)] = &s.pixels;
                labels[static_cast<std::size_t>(i)] = label_map.at(s.label);
            }
            Backbone::Cache cache;
            const Tensor feats =
                result.model.backbone.embed_cached(stack_images(images), cache);
            const Tensor logits = head.logits(feats);
            LossResult loss = softmax_cross_entropy(logits, labels);
            if (!std::isfinite(loss.loss))
                throw std::runtime_error(
                    "train_backbone: loss diverged (NaN/Inf) at epoch " +
                    std::to_string(epoch + 1) + ", batch offset " + std::to_string(start));
            loss_sum += static_cast<double>(loss.loss) * count;

            const Tensor dfeats = head.backward(feats, loss.dlogits, true);
            result.model.backbone.backward(cache, dfeats);
            sgd_step(result.model.backbone.params(), config.lr, config.momentum,
                     config.weight_decay);
            sgd_step(head.params(), config.lr, config.momentum, config.weight_decay);
        }
        result.epoch_losses.push_back(static_cast<float>(loss_sum / (2 * n)));
    }
    return result;  // head goes out of scope; only the backbone is kept
}

EpisodeFeatures compute_episode_features(const ModelState& model, const Episode& episode) {
    EpisodeFeatures f;
    auto embed_entries = [&](const std::vector<Episode::Entry>& entries) {
        std::vector<const Tensor*> imgs;
        imgs.reserve(entries.size());
        for (const auto& e : entries) imgs.push_back(&episode.pixels(e));
        return model.backbone.embed(stack_images(imgs));
    };
    f.support = embed_entries(episode.support());
    f.query = embed_entries(episode.query());
    if (episode.unlabeled_count() > 0) {
        std::vector<const Tensor*> imgs;
        for (int i = 0; i < episode.unlabeled_count(); ++i)
            imgs.push_back(&episode.unlabeled_pixels(i));
        f.unlabeled = model.backbone.embed(stack_images(imgs));
    }
    return f;
}

std::vector<int> pseudo_label(const Head& head, const Tensor& unlabeled_features) {
    if (unlabeled_features.empty()) return {};
    return argmax_rows(head.logits(unlabeled_features));
}

std::vector<int> select_sources(const Episode& episode, const std::vector<int>& pool_labels,
                                Rng& rng) {
    std::vector<std::vector<int>> by_label(static_cast<std::size_t>(episode.spec().ways));
    for (std::size_t j = 0; j < pool_labels.size(); ++j) {
        const int l = pool_labels[j];
        if (l < 0 || l >= episode.spec().ways)
            throw std::invalid_argument("select_sources: pool label out of range");
        by_label[static_cast<std::size_t>(l)].push_back(static_cast<int>(j));
    }
    std::vector<int> donors;
    donors.reserve(episode.support().size());
    for (const auto& s : episode.support()) {
        const auto& candidates = by_label[static_cast<std::size_t>(s.local_label)];
        if (candidates.empty())
            donors.push_back(-1);
        else
            donors.push_back(
                candidates[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(candidates.size())))]);
    }
    return donors;
}

std::vector<int> select_sources_uniform(const Episode& episode, Rng& rng) {
    std::vector<int> donors;
    donors.reserve(episode.support().size());
    const int u = episode.unlabeled_count();
    for (std::size_t i = 0; i < episode.support().size(); ++i)
        donors.push_back(u > 0 ? rng.uniform_int(u) : -1);
    return donors;
}

std::vector<ReplacementOutcome> synthesize_support(const Episode& episode,
                                                   const std::vector<int>& donors,
                                                   const ReplacementMethod& method, Rng& rng) {
    if (donors.size() != episode.support().size())
        throw std::invalid_argument("synthesize_support: one donor entry per support image");
    std::vector<ReplacementOutcome> out;
    out.reserve(donors.size());
    for (std::size_t i = 0; i < donors.size(); ++i) {
        const Tensor& target = episode.pixels(episode.support()[i]);
        const int donor = donors[i];
        if (donor < 0) {
            ReplacementOutcome o;
            o.image = target;
            o.mask.assign(static_cast<std::size_t>(target.dim(1)) * target.dim(2), 0);
            o.changed = false;
            out.push_back(std::move(o));
        } else {
            out.push_back(apply_replacement(target, episode.unlabeled_pixels(donor),
                                            episode.unlabeled_sample_id(donor), method, rng));
        }
    }
    return out;
}

namespace {

std::vector<int> support_labels(const Episode& episode) {
    std::vector<int> labels;
    labels.reserve(episode.support().size());
    for (const auto& s : episode.support()) labels.push_back(s.local_label);
    return labels;
}

/// One pass of mini-batch SGD over the given features/labels.
/// Returns the set-mean Eq. 2 loss.
float train_head_epoch(Head& head, const Tensor& features, const std::vector<int>& labels,
                       int batch_size, float lr, float momentum, Rng& order_rng) {
    const int n = features.dim(0);
    const int d = features.dim(1);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    order_rng.shuffle(order);
    const int bs = batch_size > 0 ? batch_size : n;

    double loss_sum = 0.0;
    for (int start = 0; start < n; start += bs) {
        const int count = std::min(bs, n - start);
        Tensor batch({count, d});
        std::vector<int> batch_labels(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const int idx = order[static_cast<std::size_t>(start + i)];
            std::copy(features.data() + static_cast<std::int64_t>(idx) * d,
                      features.data() + static_cast<std::int64_t>(idx + 1) * d,
                      batch.data() + static_cast<std::int64_t>(i) * d);
            batch_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(idx)];
        }
        const Tensor logits = head.logits(batch);
        LossResult loss = softmax_cross_entropy(logits, batch_labels);
        if (!std::isfinite(loss.loss))
            throw std::runtime_error("finetune: loss diverged (NaN/Inf)");
        loss_sum += static_cast<double>(loss.loss) * count;
        head.backward(batch, loss.dlogits, false);
        sgd_step(head.params(), lr, momentum, 0.0f);
    }
    return static_cast<float>(loss_sum / n);
}

/// Features of a synthesized support set: unchanged images reuse the cached
/// rows bit-exactly; changed ones are embedded in one batch.
Tensor synthesized_features(const ModelState& model, const EpisodeFeatures& cache,
                            const std::vector<ReplacementOutcome>& outcomes) {
    const int d = cache.support.dim(1);
    Tensor feats = cache.support;
    std::vector<const Tensor*> changed;
    std::vector<int> rows;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].changed) {
            changed.push_back(&outcomes[i].image);
            rows.push_back(static_cast<int>(i));
        }
    }
    if (!changed.empty()) {
        const Tensor fresh = model.backbone.embed(stack_images(changed));
        for (std::size_t i = 0; i < rows.size(); ++i)
            std::copy(fresh.data() + static_cast<std::int64_t>(i) * d,
                      fresh.data() + static_cast<std::int64_t>(i + 1) * d,
                      feats.data() + static_cast<std::int64_t>(rows[i]) * d);
    }
    return feats;
}

float accuracy_against(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.empty()) return 0.0f;
    int hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truth[i]) ++hits;
    return static_cast<float>(hits) / static_cast<float>(predictions.size());
}

std::vector<int> unlabeled_truth(const Episode& episode, OracleAccess token) {
    std::vector<int> truth(static_cast<std::size_t>(episode.unlabeled_count()));
    for (int i = 0; i < episode.unlabeled_count(); ++i)
        truth[static_cast<std::size_t>(i)] = episode.unlabeled_true_label(i, token);
    return truth;
}

}  // namespace

FinetuneResult finetune(const ModelState& model, const Episode& episode,
                        const EpisodeFeatures& features, const FinetuneConfig& config,
                        std::uint64_t seed, const FinetuneOptions& options) {
    if (!model.frozen)
        throw std::invalid_argument("finetune: backbone must be frozen (freeze_backbone)");
    validate_method(config.method);
    if (config.epochs < 1) throw std::invalid_argument("finetune: epochs must be >= 1");

    const int ways = episode.spec().ways;
    const int dim = model.backbone.config().embed_dim();
    Variant variant = config.variant;
    if (episode.unlabeled_count() == 0 && variant != Variant::Vanilla) {
        std::fprintf(stderr, "[clr] %s with u=0 behaves as Vanilla for this episode\n",
                     variant_name(variant));
        variant = Variant::Vanilla;
    }

    Rng rng_init(Rng::derive(seed, kStreamHeadInit));
    Rng rng_order(Rng::derive(seed, kStreamBatchOrder));
    Rng rng_replace(Rng::derive(seed, kStreamReplace));

    const std::vector<int> sup_labels = support_labels(episode);

    FinetuneResult result;
    result.head = Head::create(config.head == HeadKind::Cosine ? HeadKind::Cosine
                                                               : HeadKind::Linear,
                               ways, dim, rng_init);
    if (config.head == HeadKind::Cosine) result.head.imprint(features.support, sup_labels);

    // epoch 1 trains on the original support set (Algorithm order:
    // optimize, then predict/select/replace for the next epoch)
    Tensor current = features.support;
    std::vector<int> current_labels = sup_labels;
    Tensor otlr_features;
    bool otlr_built = false;

    std::vector<int> query_truth;
    if (options.record_query_accuracy)
        for (const auto& q : episode.query()) query_truth.push_back(q.local_label);
    std::vector<int> oracle_truth;
    const bool want_pl_diag = options.record_pl_accuracy && episode.unlabeled_count() > 0;
    if (want_pl_diag) oracle_truth = unlabeled_truth(episode, OracleAccess{});

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        FinetuneEpochStats stats;
        stats.loss = train_head_epoch(result.head, current, current_labels, config.batch,
                                      config.lr, config.momentum, rng_order);
        if (options.record_query_accuracy)
            stats.query_accuracy =
                accuracy_against(argmax_rows(result.head.logits(features.query)), query_truth);
        if (want_pl_diag)
            stats.pl_accuracy =
                accuracy_against(pseudo_label(result.head, features.unlabeled), oracle_truth);
        result.epochs.push_back(stats);

        if (epoch == config.epochs) break;

        switch (variant) {
            case Variant::Vanilla:
                break;
            case Variant::Clr: {
                const auto pl = pseudo_label(result.head, features.unlabeled);
                const auto donors = select_sources(episode, pl, rng_replace);
                const auto outcomes =
                    synthesize_support(episode, donors, config.method, rng_replace);
                current = synthesized_features(model, features, outcomes);
                break;
            }
            case Variant::ClrNoPl: {
                const auto donors = select_sources_uniform(episode, rng_replace);
                const auto outcomes =
                    synthesize_support(episode, donors, config.method, rng_replace);
                current = synthesized_features(model, features, outcomes);
                break;
            }
            case Variant::ClrGt: {
                const auto truth = unlabeled_truth(episode, OracleAccess{});
                const auto donors = select_sources(episode, truth, rng_replace);
                const auto outcomes =
                    synthesize_support(episode, donors, config.method, rng_replace);
                current = synthesized_features(model, features, outcomes);
                break;
            }
            case Variant::Otlr: {
                if (!otlr_built) {
                    const auto pl = pseudo_label(result.head, features.unlabeled);
                    const auto donors = select_sources(episode, pl, rng_replace);
                    const auto outcomes =
                        synthesize_support(episode, donors, config.method, rng_replace);
                    otlr_features = synthesized_features(model, features, outcomes);
                    otlr_built = true;
                }
                current = otlr_features;
                break;
            }
            case Variant::Car: {
                const auto pl = pseudo_label(result.head, features.unlabeled);
                const int s = features.support.dim(0);
                const int u = features.unlabeled.dim(0);
                Tensor joint({s + u, dim});
                std::copy(features.support.data(), features.support.data() + features.support.numel(),
                          joint.data());
                std::copy(features.unlabeled.data(),
                          features.unlabeled.data() + features.unlabeled.numel(),
                          joint.data() + features.support.numel());
                current = std::move(joint);
                current_labels = sup_labels;
                current_labels.insert(current_labels.end(), pl.begin(), pl.end());
                break;
            }
        }
    }
    return result;
}

FinetuneResult finetune(const ModelState& model, const Episode& episode,
                        const FinetuneConfig& config, std::uint64_t seed,
                        const FinetuneOptions& options) {
    return finetune(model, episode, compute_episode_features(model, episode), config, seed,
                    options);
}

double evaluate_episode(const Head& head, const Episode& episode,
                        const EpisodeFeatures& features) {
    const auto preds = argmax_rows(head.logits(features.query));
    int hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i] == episode.query()[i].local_label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double evaluate_episode(const ModelState& model, const Head& head, const Episode& episode) {
    return evaluate_episode(head, episode, compute_episode_features(model, episode));
}

}  // namespace clr
