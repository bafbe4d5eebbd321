#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clr/config.hpp"
#include "clr/pipeline.hpp"

namespace clr {

/// 1.96 * sample_std / sqrt(N), sample std with the N-1 denominator.
/// Throws for fewer than two values.
double ci95(const std::vector<double>& values);

struct Summary {
    std::string variant;
    EpisodeSpec spec;
    int episodes = 0;
    std::uint64_t seed = 0;
    double mean_acc_pct = 0.0;
    double ci95_pct = 0.0;
    std::vector<double> per_episode;  // accuracy fractions, by episode index
};

/// Per (episode, variant) diagnostics for the JSON-lines trace.
struct EpisodeRecord {
    int episode = 0;
    Variant variant = Variant::Clr;
    double accuracy = 0.0;
    std::uint64_t theta_before = 0;
    std::uint64_t theta_after = 0;
    std::vector<FinetuneEpochStats> epochs;
};

struct ProtocolOptions {
    bool trace = false;  // keep per-epoch diagnostics (reads hidden labels)
};

struct ProtocolResult {
    std::vector<Summary> summaries;      // one per configured variant
    std::vector<EpisodeRecord> records;  // episode-major, variant-minor; only with trace
    int freeze_violations = 0;
};

/// Episode e is sampled from Rng(derive(master_seed, e)) and replayed for
/// every variant (paired design). Episodes run in parallel; aggregation is
/// order-independent.
ProtocolResult run_protocol(const RunConfig& config, const ModelState& model,
                            const LabeledDataset& test_set, const ProtocolOptions& options = {});

struct AblationResult {
    std::vector<int> train_blocks;
    std::vector<int> ft_blocks;
    std::vector<Summary> cells;  // row-major over (train_blocks x ft_blocks)
};

/// Trains one backbone per train-block setting and evaluates the CLR variant
/// against every fine-tune-block setting.
AblationResult ablation_grid(const std::vector<int>& train_blocks,
                             const std::vector<int>& ft_blocks, const RunConfig& config,
                             const DatasetBundle& data);

// Report writers. Numeric formatting is fixed so identical runs produce
// byte-identical files.
void write_summary_csv(const std::vector<Summary>& summaries, const std::string& path);
std::vector<Summary> read_summary_csv(const std::string& path);
void write_episodes_csv(const std::vector<Summary>& summaries, const std::string& path);
void write_text_table(const std::vector<Summary>& summaries, const std::string& path);
void write_trace_jsonl(const ProtocolResult& result, const std::string& path);
void write_ablation_csv(const AblationResult& result, const std::string& path);
void write_ablation_table(const AblationResult& result, const std::string& path);
void write_embeddings_csv(const ModelState& model, const LabeledDataset& dataset,
                          const std::string& path);

/// The backbone-training seed every entry point shares, so `train`, `eval`
/// and ablation rows agree bit-exactly for equal settings.
std::uint64_t backbone_train_seed(const RunConfig& config);

}  // namespace clr
