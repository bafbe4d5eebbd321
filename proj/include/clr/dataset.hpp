#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "clr/tensor.hpp"

namespace clr {

enum class SplitRole { Train, Val, Test };

const char* split_role_name(SplitRole role);

/// One image with its global class id and a dataset-unique sample id.
struct ImageSample {
    int id = -1;
    int label = -1;
    Tensor pixels;  // CxHxW, values in [0,1]
};

class LabeledDataset {
public:
    LabeledDataset() = default;
    LabeledDataset(std::vector<ImageSample> samples, SplitRole role);

    const std::vector<ImageSample>& samples() const { return samples_; }
    const ImageSample& sample(int i) const { return samples_[static_cast<std::size_t>(i)]; }
    int size() const { return static_cast<int>(samples_.size()); }
    SplitRole role() const { return role_; }

    /// Sorted unique class ids present in this split.
    const std::vector<int>& classes() const { return classes_; }

    /// Indices (into samples()) of every sample with the given label.
    const std::vector<int>& class_samples(int label) const;

    /// Enforces the type invariants; throws std::runtime_error on violation.
    void validate() const;

private:
    std::vector<ImageSample> samples_;
    std::vector<int> classes_;
    std::map<int, std::vector<int>> by_class_;
    SplitRole role_ = SplitRole::Train;
};

struct DatasetBundle {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
    std::map<int, std::string> class_names;
};

/// Loads root/<class_name>/<image>.png per the split file (one
/// "<class_name>,<train|val|test>" line per class). Images are resized to
/// side x side. Samples are ordered by (class name, file name) before id
/// assignment.
DatasetBundle load_dataset(const std::string& root, const std::string& split_file, int side);

/// Procedural texture dataset: per class a sinusoidal grating (class-specific
/// frequency and orientation) plus a class-colored blob at a random position,
/// with per-sample phase, blob geometry and N(0, 0.1) pixel noise, clamped to
/// [0,1]. Deterministic given the seed.
LabeledDataset make_synthetic_dataset(int num_classes, int per_class, int side,
                                      std::uint64_t seed);

/// Synthetic dataset with the first 3/4 of the classes (rounded down) as the
/// train split and the remainder as the test split. No val split.
DatasetBundle make_synthetic_bundle(int num_classes, int per_class, int side, std::uint64_t seed);

/// Writes a bundle in the directory layout load_dataset expects, plus a
/// split file at <root>/split.txt.
void export_png_dataset(const DatasetBundle& bundle, const std::string& root);

std::string synthetic_class_name(int label);

}  // namespace clr
