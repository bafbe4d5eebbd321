#include "clr/episode.hpp"

#include <stdexcept>
#include <string>

namespace clr {

void EpisodeSpec::validate() const {
    if (ways < 2) throw std::invalid_argument("EpisodeSpec: n must be >= 2");
    if (shots < 1) throw std::invalid_argument("EpisodeSpec: k must be >= 1");
    if (queries_per_class < 1) throw std::invalid_argument("EpisodeSpec: t must be >= 1");
    if (unlabeled_per_class < 0) throw std::invalid_argument("EpisodeSpec: u must be >= 0");
}

Episode::Episode(const LabeledDataset& source, EpisodeSpec spec, std::vector<Entry> support,
                 std::vector<Entry> query, std::vector<Entry> unlabeled,
                 std::vector<int> class_ids)
    : source_(&source),
      spec_(spec),
      support_(std::move(support)),
      query_(std::move(query)),
      unlabeled_(std::move(unlabeled)),
      class_ids_(std::move(class_ids)) {}

const Tensor& Episode::unlabeled_pixels(int i) const {
    return source_->sample(unlabeled_[static_cast<std::size_t>(i)].dataset_index).pixels;
}

int Episode::unlabeled_sample_id(int i) const {
    return source_->sample(unlabeled_[static_cast<std::size_t>(i)].dataset_index).id;
}

int Episode::unlabeled_true_label(int i, OracleAccess) const {
    ++oracle_reads_;
    return unlabeled_[static_cast<std::size_t>(i)].local_label;
}

const Tensor& Episode::pixels(const Entry& e) const {
    return source_->sample(e.dataset_index).pixels;
}

int Episode::sample_id(const Entry& e) const { return source_->sample(e.dataset_index).id; }

Episode sample_episode(const LabeledDataset& test_set, const EpisodeSpec& spec, Rng& rng) {
    spec.validate();
    const auto& classes = test_set.classes();
    if (static_cast<int>(classes.size()) < spec.ways)
        throw std::invalid_argument("sample_episode: dataset has " +
                                    std::to_string(classes.size()) + " classes, need " +
                                    std::to_string(spec.ways));

    const int per_class = spec.shots + spec.queries_per_class + spec.unlabeled_per_class;
    const auto chosen = rng.sample_without_replacement(static_cast<int>(classes.size()), spec.ways);

    std::vector<Episode::Entry> support, query, unlabeled;
    std::vector<int> class_ids;
    for (int local = 0; local < spec.ways; ++local) {
        const int gid = classes[static_cast<std::size_t>(chosen[static_cast<std::size_t>(local)])];
        class_ids.push_back(gid);
        const auto& members = test_set.class_samples(gid);
        if (static_cast<int>(members.size()) < per_class)
            throw std::invalid_argument("sample_episode: class " + std::to_string(gid) + " has " +
                                        std::to_string(members.size()) + " samples, need " +
                                        std::to_string(per_class));
        const auto picks =
            rng.sample_without_replacement(static_cast<int>(members.size()), per_class);
        int at = 0;
        for (int i = 0; i < spec.shots; ++i, ++at)
            support.push_back({members[static_cast<std::size_t>(picks[static_cast<std::size_t>(at)])], local});
        for (int i = 0; i < spec.queries_per_class; ++i, ++at)
            query.push_back({members[static_cast<std::size_t>(picks[static_cast<std::size_t>(at)])], local});
        for (int i = 0; i < spec.unlabeled_per_class; ++i, ++at)
            unlabeled.push_back({members[static_cast<std::size_t>(picks[static_cast<std::size_t>(at)])], local});
    }
    return Episode(test_set, spec, std::move(support), std::move(query), std::move(unlabeled),
                   std::move(class_ids));
}

}  // namespace clr
