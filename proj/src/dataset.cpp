#include "clr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "clr/png_io.hpp"
#include "clr/rng.hpp"

namespace fs = std::filesystem;

namespace clr {

const char* split_role_name(SplitRole role) {
    switch (role) {
        case SplitRole::Train: return "train";
        case SplitRole::Val: return "val";
        case SplitRole::Test: return "test";
    }
    return "?";
}

LabeledDataset::LabeledDataset(std::vector<ImageSample> samples, SplitRole role)
    : samples_(std::move(samples)), role_(role) {
    std::set<int> classes;
    for (int i = 0; i < size(); ++i) {
        const auto& s = samples_[static_cast<std::size_t>(i)];
        classes.insert(s.label);
        by_class_[s.label].push_back(i);
    }
    classes_.assign(classes.begin(), classes.end());
}

const std::vector<int>& LabeledDataset::class_samples(int label) const {
    const auto it = by_class_.find(label);
    if (it == by_class_.end())
        throw std::invalid_argument("dataset has no class " + std::to_string(label));
    return it->second;
}

void LabeledDataset::validate() const {
    std::set<int> ids;
    for (const auto& s : samples_) {
        if (!ids.insert(s.id).second)
            throw std::runtime_error("dataset invariant: duplicate sample id " +
                                     std::to_string(s.id));
        for (std::int64_t i = 0; i < s.pixels.numel(); ++i)
            if (!(s.pixels[i] >= 0.0f && s.pixels[i] <= 1.0f))
                throw std::runtime_error("dataset invariant: pixel outside [0,1] in sample " +
                                         std::to_string(s.id));
    }
}

namespace {

SplitRole parse_role(const std::string& s, const std::string& line) {
    if (s == "train") return SplitRole::Train;
    if (s == "val") return SplitRole::Val;
    if (s == "test") return SplitRole::Test;
    throw std::runtime_error("split file: bad role in line: " + line);
}

float frac(double x) { return static_cast<float>(x - std::floor(x)); }

// HSV (s, v fixed) to RGB; h in [0,1).
void class_color(float h, float* rgb) {
    const float s = 0.8f, v = 0.9f;
    const float hf = h * 6.0f;
    const int i = static_cast<int>(hf) % 6;
    const float f = hf - std::floor(hf);
    const float p = v * (1.0f - s);
    const float q = v * (1.0f - s * f);
    const float t = v * (1.0f - s * (1.0f - f));
    switch (i) {
        case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
        case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
        case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
        case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
        case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
        default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
    }
}

}  // namespace

DatasetBundle load_dataset(const std::string& root, const std::string& split_file, int side) {
    std::ifstream sf(split_file);
    if (!sf) throw std::runtime_error("cannot open split file: " + split_file);

    std::map<std::string, SplitRole> split;
    std::string line;
    while (std::getline(sf, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("split file: malformed line: " + line);
        split[line.substr(0, comma)] = parse_role(line.substr(comma + 1), line);
    }
    if (split.empty()) throw std::runtime_error("split file is empty: " + split_file);

    // std::map iterates class names in sorted order; ids follow that order.
    std::map<int, std::string> class_names;
    std::vector<ImageSample> per_role[3];
    int class_id = 0;
    int sample_id = 0;
    for (const auto& [name, role] : split) {
        const fs::path dir = fs::path(root) / name;
        if (!fs::is_directory(dir))
            throw std::runtime_error("split file names class '" + name +
                                     "' but directory is missing: " + dir.string());
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension().string();
            if (ext == ".png" || ext == ".PNG") files.push_back(entry.path());
        }
        if (files.empty())
            throw std::runtime_error("class '" + name + "' has no PNG images in " + dir.string());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            ImageSample s;
            s.id = sample_id++;
            s.label = class_id;
            try {
                s.pixels = resize_bilinear(read_png(file.string()), side);
            } catch (const std::exception& e) {
                throw std::runtime_error("failed to load '" + file.string() + "': " + e.what());
            }
            per_role[static_cast<int>(role)].push_back(std::move(s));
        }
        class_names[class_id] = name;
        ++class_id;
    }

    DatasetBundle bundle;
    bundle.train = LabeledDataset(std::move(per_role[0]), SplitRole::Train);
    bundle.val = LabeledDataset(std::move(per_role[1]), SplitRole::Val);
    bundle.test = LabeledDataset(std::move(per_role[2]), SplitRole::Test);
    bundle.class_names = std::move(class_names);
    return bundle;
}

LabeledDataset make_synthetic_dataset(int num_classes, int per_class, int side,
                                      std::uint64_t seed) {
    if (num_classes < 2) throw std::invalid_argument("make_synthetic_dataset: need >= 2 classes");
    if (per_class < 1) throw std::invalid_argument("make_synthetic_dataset: need >= 1 per class");
    if (side < 4) throw std::invalid_argument("make_synthetic_dataset: side too small");

    constexpr double kGolden = 0.618033988749895;
    std::vector<ImageSample> samples;
    samples.reserve(static_cast<std::size_t>(num_classes) * per_class);

    int sample_id = 0;
    for (int c = 0; c < num_classes; ++c) {
        // Class identity: grating frequency/orientation plus a blob color.
        // Hues repeat every 8 classes so color alone never separates a large
        // class set; the grating carries the rest.
        const float orient = static_cast<float>(std::numbers::pi) * frac(kGolden * c + 0.23);
        const float freq = 2.0f + 3.0f * frac((1.0 - kGolden) * c + 0.41);
        float rgb[3];
        class_color(frac(kGolden * (c % 8 + 1)), rgb);
        const float co = std::cos(orient), so = std::sin(orient);

        Rng rng(Rng::derive(seed, 0xDA7A, static_cast<std::uint64_t>(c)));
        for (int k = 0; k < per_class; ++k) {
            const float phase =
                static_cast<float>(rng.uniform_range(0.0, 2.0 * std::numbers::pi));
            const float cx = static_cast<float>(rng.uniform_range(0.25, 0.75)) * side;
            const float cy = static_cast<float>(rng.uniform_range(0.25, 0.75)) * side;
            const float radius =
                static_cast<float>(rng.uniform_range(side / 7.0, side / 4.5));

            ImageSample s;
            s.id = sample_id++;
            s.label = c;
            s.pixels = Tensor({3, side, side});
            float* px = s.pixels.data();
            for (int ch = 0; ch < 3; ++ch)
                for (int y = 0; y < side; ++y)
                    for (int x = 0; x < side; ++x) {
                        const float proj = (x * co + y * so) / static_cast<float>(side);
                        const float grating =
                            0.5f + 0.22f * std::sin(2.0f * static_cast<float>(std::numbers::pi) *
                                                        freq * proj +
                                                    phase);
                        const float dx = x - cx, dy = y - cy;
                        const float wgt =
                            0.8f * std::exp(-(dx * dx + dy * dy) / (2.0f * radius * radius));
                        float v = (1.0f - wgt) * grating + wgt * rgb[ch];
                        v += 0.1f * static_cast<float>(rng.normal());
                        px[(static_cast<std::int64_t>(ch) * side + y) * side + x] =
                            std::clamp(v, 0.0f, 1.0f);
                    }
            samples.push_back(std::move(s));
        }
    }
    return LabeledDataset(std::move(samples), SplitRole::Train);
}

DatasetBundle make_synthetic_bundle(int num_classes, int per_class, int side,
                                    std::uint64_t seed) {
    const LabeledDataset all = make_synthetic_dataset(num_classes, per_class, side, seed);
    const int train_classes = num_classes * 3 / 4;
    if (train_classes < 2 || train_classes >= num_classes)
        throw std::invalid_argument(
            "make_synthetic_bundle: class count leaves an unusable train/test split");

    std::vector<ImageSample> train, test;
    for (const auto& s : all.samples()) {
        if (s.label < train_classes)
            train.push_back(s);
        else
            test.push_back(s);
    }
    DatasetBundle bundle;
    bundle.train = LabeledDataset(std::move(train), SplitRole::Train);
    bundle.test = LabeledDataset(std::move(test), SplitRole::Test);
    for (int c = 0; c < num_classes; ++c) bundle.class_names[c] = synthetic_class_name(c);
    return bundle;
}

std::string synthetic_class_name(int label) {
    std::ostringstream os;
    os << "class_";
    if (label < 100) os << (label < 10 ? "00" : "0");
    os << label;
    return os.str();
}

void export_png_dataset(const DatasetBundle& bundle, const std::string& root) {
    fs::create_directories(root);
    std::ofstream split(fs::path(root) / "split.txt", std::ios::trunc);
    if (!split) throw std::runtime_error("cannot write split file under " + root);

    const LabeledDataset* splits[3] = {&bundle.train, &bundle.val, &bundle.test};
    for (const auto* ds : splits) {
        for (int label : ds->classes()) {
            const auto it = bundle.class_names.find(label);
            const std::string name =
                it != bundle.class_names.end() ? it->second : synthetic_class_name(label);
            split << name << ',' << split_role_name(ds->role()) << '\n';
            const fs::path dir = fs::path(root) / name;
            fs::create_directories(dir);
            for (int i : ds->class_samples(label)) {
                const auto& s = ds->sample(i);
                std::ostringstream fn;
                fn << "img_" << s.id << ".png";
                write_png(s.pixels, (dir / fn.str()).string());
            }
        }
    }
}

}  // namespace clr
