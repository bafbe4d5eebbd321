#include "clr/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace clr {

double ci95(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("ci95: need at least 2 values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    const double sample_std = std::sqrt(sq / static_cast<double>(n - 1));
    return 1.96 * sample_std / std::sqrt(static_cast<double>(n));
}

std::uint64_t backbone_train_seed(const RunConfig& config) {
    return Rng::derive(config.master_seed, kStreamTrain);
}

ProtocolResult run_protocol(const RunConfig& config, const ModelState& model,
                            const LabeledDataset& test_set, const ProtocolOptions& options) {
    config.validate();
    if (!model.frozen)
        throw std::invalid_argument("run_protocol: backbone must be frozen");

    const int episodes = config.bench_episodes;
    const int nv = static_cast<int>(config.variants.size());

    ProtocolResult result;
    result.summaries.resize(static_cast<std::size_t>(nv));
    for (int v = 0; v < nv; ++v) {
        auto& s = result.summaries[static_cast<std::size_t>(v)];
        s.variant = variant_name(config.variants[static_cast<std::size_t>(v)]);
        s.spec = config.episode;
        s.episodes = episodes;
        s.seed = config.master_seed;
        s.per_episode.assign(static_cast<std::size_t>(episodes), 0.0);
    }
    result.records.assign(options.trace ? static_cast<std::size_t>(episodes) * nv : 0,
                          EpisodeRecord{});

    FinetuneOptions ft_options;
    ft_options.record_pl_accuracy = options.trace;
    ft_options.record_query_accuracy = options.trace;

    std::vector<int> freeze_violations(static_cast<std::size_t>(episodes), 0);

#pragma omp parallel for schedule(dynamic)
    for (int e = 0; e < episodes; ++e) {
        Rng episode_rng(Rng::derive(config.master_seed, static_cast<std::uint64_t>(e),
                                    kStreamEpisode));
        const Episode episode = sample_episode(test_set, config.episode, episode_rng);
        const EpisodeFeatures features = compute_episode_features(model, episode);
        const std::uint64_t ft_seed =
            Rng::derive(config.master_seed, static_cast<std::uint64_t>(e), kStreamFinetune);

        for (int v = 0; v < nv; ++v) {
            const Variant variant = config.variants[static_cast<std::size_t>(v)];
            const std::uint64_t before = checksum(model.backbone.params());
            FinetuneResult ft =
                finetune(model, episode, features, config.finetune_config(variant), ft_seed,
                         ft_options);
            const std::uint64_t after = checksum(model.backbone.params());
            if (before != after) ++freeze_violations[static_cast<std::size_t>(e)];

            const double acc = evaluate_episode(ft.head, episode, features);
            result.summaries[static_cast<std::size_t>(v)]
                .per_episode[static_cast<std::size_t>(e)] = acc;
            if (options.trace) {
                auto& rec = result.records[static_cast<std::size_t>(e) * nv +
                                           static_cast<std::size_t>(v)];
                rec.episode = e;
                rec.variant = variant;
                rec.accuracy = acc;
                rec.theta_before = before;
                rec.theta_after = after;
                rec.epochs = std::move(ft.epochs);
            }
        }
    }

    for (int violations : freeze_violations) result.freeze_violations += violations;
    for (auto& s : result.summaries) {
        std::vector<double> pct;
        pct.reserve(s.per_episode.size());
        double mean = 0.0;
        for (double a : s.per_episode) {
            pct.push_back(100.0 * a);
            mean += 100.0 * a;
        }
        s.mean_acc_pct = mean / static_cast<double>(pct.size());
        s.ci95_pct = pct.size() >= 2 ? ci95(pct) : 0.0;
    }
    return result;
}

AblationResult ablation_grid(const std::vector<int>& train_blocks,
                             const std::vector<int>& ft_blocks, const RunConfig& config,
                             const DatasetBundle& data) {
    if (train_blocks.empty() || ft_blocks.empty())
        throw std::invalid_argument("ablation_grid: block lists must be non-empty");
    AblationResult result;
    result.train_blocks = train_blocks;
    result.ft_blocks = ft_blocks;

    for (int tb : train_blocks) {
        RunConfig row = config;
        row.train_max_blocks = tb;
        row.variants = {Variant::Clr};
        Rng train_rng(backbone_train_seed(row));
        TrainResult trained = train_backbone(data.train, row.train_config(), train_rng);
        freeze_backbone(trained.model);
        for (int fb : ft_blocks) {
            RunConfig cell = row;
            cell.finetune_max_blocks = fb;
            ProtocolResult run = run_protocol(cell, trained.model, data.test);
            Summary s = std::move(run.summaries.front());
            result.cells.push_back(std::move(s));
        }
    }
    return result;
}

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    return os;
}

}  // namespace

void write_summary_csv(const std::vector<Summary>& summaries, const std::string& path) {
    auto os = open_out(path);
    os << "variant,n,k,t,u,episodes,mean_acc,ci95,seed\n";
    for (const auto& s : summaries)
        os << s.variant << ',' << s.spec.ways << ',' << s.spec.shots << ','
           << s.spec.queries_per_class << ',' << s.spec.unlabeled_per_class << ',' << s.episodes
           << ',' << fmt("%.4f", s.mean_acc_pct) << ',' << fmt("%.4f", s.ci95_pct) << ','
           << s.seed << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<Summary> read_summary_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line) || line != "variant,n,k,t,u,episodes,mean_acc,ci95,seed")
        throw std::runtime_error("bad summary.csv header in " + path);
    std::vector<Summary> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 9) throw std::runtime_error("bad summary.csv row: " + line);
        Summary s;
        s.variant = fields[0];
        s.spec.ways = std::stoi(fields[1]);
        s.spec.shots = std::stoi(fields[2]);
        s.spec.queries_per_class = std::stoi(fields[3]);
        s.spec.unlabeled_per_class = std::stoi(fields[4]);
        s.episodes = std::stoi(fields[5]);
        s.mean_acc_pct = std::stod(fields[6]);
        s.ci95_pct = std::stod(fields[7]);
        s.seed = std::stoull(fields[8]);
        out.push_back(std::move(s));
    }
    return out;
}

void write_episodes_csv(const std::vector<Summary>& summaries, const std::string& path) {
    auto os = open_out(path);
    os << "episode_index,variant,accuracy\n";
    if (summaries.empty()) return;
    const int episodes = summaries.front().episodes;
    for (int e = 0; e < episodes; ++e)
        for (const auto& s : summaries)
            os << e << ',' << s.variant << ','
               << fmt("%.6f", s.per_episode[static_cast<std::size_t>(e)]) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_text_table(const std::vector<Summary>& summaries, const std::string& path) {
    auto os = open_out(path);
    const auto& spec = summaries.front().spec;
    os << summaries.front().episodes << " episodes, " << spec.ways << "-way " << spec.shots
       << "-shot, t=" << spec.queries_per_class << ", u=" << spec.unlabeled_per_class
       << ", seed " << summaries.front().seed << "\n";
    os << "mean accuracy % with 95% confidence interval of the mean\n\n";
    std::size_t width = 8;
    for (const auto& s : summaries) width = std::max(width, s.variant.size());
    for (const auto& s : summaries) {
        os << s.variant;
        for (std::size_t i = s.variant.size(); i < width + 2; ++i) os << ' ';
        os << fmt("%6.2f", s.mean_acc_pct) << " +/- " << fmt("%.2f", s.ci95_pct) << "\n";
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_trace_jsonl(const ProtocolResult& result, const std::string& path) {
    auto os = open_out(path);
    for (const auto& rec : result.records) {
        for (std::size_t i = 0; i < rec.epochs.size(); ++i) {
            const auto& ep = rec.epochs[i];
            nlohmann::json line{{"episode", rec.episode},
                                {"variant", variant_name(rec.variant)},
                                {"epoch", static_cast<int>(i) + 1},
                                {"loss", ep.loss}};
            if (ep.pl_accuracy) line["pl_acc"] = *ep.pl_accuracy;
            if (ep.query_accuracy) line["query_acc"] = *ep.query_accuracy;
            os << line.dump() << '\n';
        }
        nlohmann::json summary{{"episode", rec.episode},
                               {"variant", variant_name(rec.variant)},
                               {"accuracy", rec.accuracy},
                               {"theta_checksum_before", hex64(rec.theta_before)},
                               {"theta_checksum_after", hex64(rec.theta_after)}};
        os << summary.dump() << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_ablation_csv(const AblationResult& result, const std::string& path) {
    auto os = open_out(path);
    os << "train_blocks,ft_blocks,mean_acc,ci95,episodes,seed\n";
    std::size_t i = 0;
    for (int tb : result.train_blocks)
        for (int fb : result.ft_blocks) {
            const auto& s = result.cells[i++];
            os << tb << ',' << fb << ',' << fmt("%.4f", s.mean_acc_pct) << ','
               << fmt("%.4f", s.ci95_pct) << ',' << s.episodes << ',' << s.seed << '\n';
        }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_ablation_table(const AblationResult& result, const std::string& path) {
    auto os = open_out(path);
    os << "mean accuracy %: rows = train max blocks, cols = fine-tune max blocks\n\n";
    os << "train\\ft";
    for (int fb : result.ft_blocks) os << '\t' << fb;
    os << '\n';
    std::size_t i = 0;
    for (int tb : result.train_blocks) {
        os << tb;
        for (std::size_t j = 0; j < result.ft_blocks.size(); ++j) {
            const auto& s = result.cells[i++];
            os << '\t' << fmt("%.2f", s.mean_acc_pct) << " +/- " << fmt("%.2f", s.ci95_pct);
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_embeddings_csv(const ModelState& model, const LabeledDataset& dataset,
                          const std::string& path) {
    auto os = open_out(path);
    const int d = model.backbone.config().embed_dim();
    os << "id,label";
    for (int j = 0; j < d; ++j) os << ",f" << j;
    os << '\n';
    constexpr int kChunk = 64;
    for (int start = 0; start < dataset.size(); start += kChunk) {
        const int count = std::min(kChunk, dataset.size() - start);
        std::vector<const Tensor*> imgs;
        for (int i = 0; i < count; ++i) imgs.push_back(&dataset.sample(start + i).pixels);
        const Tensor feats = model.backbone.embed(stack_images(imgs));
        for (int i = 0; i < count; ++i) {
            const auto& s = dataset.sample(start + i);
            os << s.id << ',' << s.label;
            for (int j = 0; j < d; ++j)
                os << ',' << fmt("%.6g", feats[static_cast<std::int64_t>(i) * d + j]);
            os << '\n';
        }
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace clr
