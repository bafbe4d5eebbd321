#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clr/episode.hpp"
#include "clr/pipeline.hpp"

namespace clr {

/// Everything a run needs, addressable through dotted config keys. The key
/// set is closed: unknown keys are rejected, and every key can be set either
/// in a key=value config file or as a --key=value flag.
struct RunConfig {
    // dataset.*
    std::string dataset_root;        // empty -> synthetic dataset
    std::string dataset_split_file;
    int synthetic_classes = 40;      // first 3/4 train, rest test
    int synthetic_per_class = 100;
    int synthetic_side = 32;         // also the resize side for directory datasets
    std::uint64_t synthetic_seed = 7;

    // episode.*
    EpisodeSpec episode;

    // train.*
    int train_epochs = 30;
    int train_batch = 64;
    float train_lr = 0.05f;
    float train_momentum = 0.9f;
    float train_weight_decay = 5e-4f;
    int train_max_blocks = 4;
    bool train_regen_per_epoch = false;

    // finetune.*
    std::vector<Variant> variants = {Variant::Clr};
    int finetune_epochs = 100;
    float finetune_lr = 0.01f;
    int finetune_max_blocks = 6;
    HeadKind head = HeadKind::Linear;

    // replace.*
    std::string replace_method = "blockaug";  // blockaug | randera | blockdef
    int grid_rows = 3;
    int grid_cols = 3;
    float randera_area_lo = 0.1f;
    float randera_area_hi = 0.3f;
    float randera_aspect_lo = 0.3f;
    float randera_aspect_hi = 3.3f;
    float blockdef_mix = 0.5f;

    // bench.*
    int bench_episodes = 600;
    std::uint64_t master_seed = 12345;
    std::string out_dir = "out";

    ReplacementMethod replacement(int max_blocks) const;
    TrainConfig train_config() const;
    FinetuneConfig finetune_config(Variant variant) const;
    DatasetBundle load_data() const;

    void validate() const;
};

/// Sets one dotted key; throws std::invalid_argument on unknown keys or
/// unparsable values.
void apply_config_key(RunConfig& config, const std::string& key, const std::string& value);

/// Parses a UTF-8 key=value file ('#' starts a comment line).
void apply_config_file(RunConfig& config, const std::string& path);

/// One "key  current-default  description" line per key.
std::string config_keys_help();

}  // namespace clr
