#pragma once

#include <cstdint>
#include <vector>

#include "clr/dataset.hpp"
#include "clr/rng.hpp"

namespace clr {

/// One n-way k-shot task shape: k support, t query and u unlabeled images
/// per class.
struct EpisodeSpec {
    int ways = 5;
    int shots = 1;
    int queries_per_class = 15;
    int unlabeled_per_class = 15;

    void validate() const;
    int total() const { return ways * (shots + queries_per_class + unlabeled_per_class); }
};

/// Capability token for reading the true labels of unlabeled samples. Only
/// the ground-truth-donor variant and bench diagnostics may construct one at
/// a call site; every read is counted for the isolation audit.
struct OracleAccess {
    explicit OracleAccess() = default;
};

/// One sampled episode. Stores indices into the source dataset (which must
/// outlive the episode) plus episode-local labels. The true labels of the
/// unlabeled set are readable only through the OracleAccess token.
class Episode {
public:
    struct Entry {
        int dataset_index = -1;
        int local_label = -1;
    };

    Episode(const LabeledDataset& source, EpisodeSpec spec, std::vector<Entry> support,
            std::vector<Entry> query, std::vector<Entry> unlabeled, std::vector<int> class_ids);

    const EpisodeSpec& spec() const { return spec_; }
    const LabeledDataset& dataset() const { return *source_; }

    const std::vector<Entry>& support() const { return support_; }
    const std::vector<Entry>& query() const { return query_; }

    int unlabeled_count() const { return static_cast<int>(unlabeled_.size()); }
    const Tensor& unlabeled_pixels(int i) const;
    int unlabeled_sample_id(int i) const;
    /// Episode-local true label of an unlabeled image. Counted.
    int unlabeled_true_label(int i, OracleAccess) const;

    /// Episode-local class index -> global class id.
    const std::vector<int>& class_ids() const { return class_ids_; }

    const Tensor& pixels(const Entry& e) const;
    int sample_id(const Entry& e) const;

    /// Number of hidden-label reads so far (isolation audit).
    std::uint64_t oracle_reads() const { return oracle_reads_; }

private:
    const LabeledDataset* source_;
    EpisodeSpec spec_;
    std::vector<Entry> support_;
    std::vector<Entry> query_;
    std::vector<Entry> unlabeled_;
    std::vector<int> class_ids_;
    mutable std::uint64_t oracle_reads_ = 0;
};

/// Draws n classes uniformly without replacement, then k+t+u samples per
/// class uniformly without replacement, partitioned into support/query/
/// unlabeled in draw order.
Episode sample_episode(const LabeledDataset& test_set, const EpisodeSpec& spec, Rng& rng);

}  // namespace clr
