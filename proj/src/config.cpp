#include "clr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace clr {

namespace {

int parse_int(const std::string& v) {
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw std::invalid_argument("not an integer: " + v);
    return out;
}

std::uint64_t parse_u64(const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw std::invalid_argument("not an unsigned integer: " + v);
    return out;
}

float parse_float(const std::string& v) {
    try {
        std::size_t used = 0;
        const float out = std::stof(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: " + v);
    }
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("not a boolean: " + v);
}

std::vector<Variant> parse_variants(const std::string& v) {
    std::vector<Variant> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(variant_from_string(item));
    }
    if (out.empty()) throw std::invalid_argument("finetune.variant: empty list");
    return out;
}

struct KeyEntry {
    const char* key;
    const char* help;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = {
        {"dataset.root", "directory dataset root (empty -> synthetic)",
         [](RunConfig& c, const std::string& v) { c.dataset_root = v; }},
        {"dataset.split_file", "class,<train|val|test> split file for directory datasets",
         [](RunConfig& c, const std::string& v) { c.dataset_split_file = v; }},
        {"dataset.synthetic.classes", "synthetic class count (3/4 train, 1/4 test)",
         [](RunConfig& c, const std::string& v) { c.synthetic_classes = parse_int(v); }},
        {"dataset.synthetic.per_class", "synthetic images per class",
         [](RunConfig& c, const std::string& v) { c.synthetic_per_class = parse_int(v); }},
        {"dataset.synthetic.side", "image side length (also directory resize side)",
         [](RunConfig& c, const std::string& v) { c.synthetic_side = parse_int(v); }},
        {"dataset.synthetic.seed", "synthetic generator seed",
         [](RunConfig& c, const std::string& v) { c.synthetic_seed = parse_u64(v); }},
        {"episode.n", "ways per episode",
         [](RunConfig& c, const std::string& v) { c.episode.ways = parse_int(v); }},
        {"episode.k", "support shots per class",
         [](RunConfig& c, const std::string& v) { c.episode.shots = parse_int(v); }},
        {"episode.t", "query images per class",
         [](RunConfig& c, const std::string& v) { c.episode.queries_per_class = parse_int(v); }},
        {"episode.u", "unlabeled images per class",
         [](RunConfig& c, const std::string& v) { c.episode.unlabeled_per_class = parse_int(v); }},
        {"train.epochs", "backbone training epochs",
         [](RunConfig& c, const std::string& v) { c.train_epochs = parse_int(v); }},
        {"train.batch", "backbone training batch size",
         [](RunConfig& c, const std::string& v) { c.train_batch = parse_int(v); }},
        {"train.lr", "backbone learning rate",
         [](RunConfig& c, const std::string& v) { c.train_lr = parse_float(v); }},
        {"train.momentum", "backbone SGD momentum",
         [](RunConfig& c, const std::string& v) { c.train_momentum = parse_float(v); }},
        {"train.weight_decay", "backbone weight decay",
         [](RunConfig& c, const std::string& v) { c.train_weight_decay = parse_float(v); }},
        {"train.max_blocks", "max replaced blocks when building the augmented train set",
         [](RunConfig& c, const std::string& v) { c.train_max_blocks = parse_int(v); }},
        {"train.regen_per_epoch", "rebuild the augmented train set every epoch",
         [](RunConfig& c, const std::string& v) { c.train_regen_per_epoch = parse_bool(v); }},
        {"finetune.variant", "comma list of Vanilla|OTLR|CLR_no_PL|CLR_GT|CAR|CLR",
         [](RunConfig& c, const std::string& v) { c.variants = parse_variants(v); }},
        {"finetune.epochs", "fine-tune epochs per episode",
         [](RunConfig& c, const std::string& v) { c.finetune_epochs = parse_int(v); }},
        {"finetune.lr", "fine-tune learning rate",
         [](RunConfig& c, const std::string& v) { c.finetune_lr = parse_float(v); }},
        {"finetune.max_blocks", "max replaced blocks during fine-tuning",
         [](RunConfig& c, const std::string& v) { c.finetune_max_blocks = parse_int(v); }},
        {"finetune.head", "linear | cosine-imprint",
         [](RunConfig& c, const std::string& v) { c.head = head_kind_from_string(v); }},
        {"replace.method", "blockaug | randera | blockdef",
         [](RunConfig& c, const std::string& v) {
             if (v != "blockaug" && v != "randera" && v != "blockdef")
                 throw std::invalid_argument("replace.method: unknown operator " + v);
             c.replace_method = v;
         }},
        {"replace.grid_rows", "block grid rows",
         [](RunConfig& c, const std::string& v) { c.grid_rows = parse_int(v); }},
        {"replace.grid_cols", "block grid cols",
         [](RunConfig& c, const std::string& v) { c.grid_cols = parse_int(v); }},
        {"replace.randera_area_lo", "RandEra minimum area fraction",
         [](RunConfig& c, const std::string& v) { c.randera_area_lo = parse_float(v); }},
        {"replace.randera_area_hi", "RandEra maximum area fraction",
         [](RunConfig& c, const std::string& v) { c.randera_area_hi = parse_float(v); }},
        {"replace.randera_aspect_lo", "RandEra minimum aspect ratio",
         [](RunConfig& c, const std::string& v) { c.randera_aspect_lo = parse_float(v); }},
        {"replace.randera_aspect_hi", "RandEra maximum aspect ratio",
         [](RunConfig& c, const std::string& v) { c.randera_aspect_hi = parse_float(v); }},
        {"replace.blockdef_mix", "BlockDef mix weight in (0,1)",
         [](RunConfig& c, const std::string& v) { c.blockdef_mix = parse_float(v); }},
        {"bench.episodes", "number of evaluation episodes",
         [](RunConfig& c, const std::string& v) { c.bench_episodes = parse_int(v); }},
        {"bench.seed", "master seed for the whole run",
         [](RunConfig& c, const std::string& v) { c.master_seed = parse_u64(v); }},
        {"bench.out_dir", "output directory",
         [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
    };
    return table;
}

}  // namespace

void apply_config_key(RunConfig& config, const std::string& key, const std::string& value) {
    for (const auto& entry : key_table()) {
        if (key == entry.key) {
            try {
                entry.set(config, value);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(key + ": " + e.what());
            }
            return;
        }
    }
    throw std::invalid_argument("unknown config key: " + key);
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // strip comment and surrounding whitespace
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected key=value, got: " + line);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        apply_config_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

std::string config_keys_help() {
    std::ostringstream os;
    for (const auto& entry : key_table()) os << "  " << entry.key << "\n      " << entry.help << "\n";
    return os.str();
}

ReplacementMethod RunConfig::replacement(int max_blocks) const {
    GridSpec grid{grid_rows, grid_cols};
    if (replace_method == "randera")
        return RandEraParams{randera_area_lo, randera_area_hi, randera_aspect_lo,
                             randera_aspect_hi};
    if (replace_method == "blockdef") return BlockDefParams{grid, max_blocks, blockdef_mix};
    return BlockAugParams{grid, max_blocks};
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.epochs = train_epochs;
    t.batch = train_batch;
    t.lr = train_lr;
    t.momentum = train_momentum;
    t.weight_decay = train_weight_decay;
    t.method = replacement(train_max_blocks);
    t.regen_augmented_per_epoch = train_regen_per_epoch;
    t.head = head;
    t.backbone.input_side = synthetic_side;
    return t;
}

FinetuneConfig RunConfig::finetune_config(Variant variant) const {
    FinetuneConfig f;
    f.variant = variant;
    f.epochs = finetune_epochs;
    f.lr = finetune_lr;
    f.method = replacement(finetune_max_blocks);
    f.head = head;
    return f;
}

DatasetBundle RunConfig::load_data() const {
    if (!dataset_root.empty()) {
        if (dataset_split_file.empty())
            throw std::invalid_argument("dataset.root is set but dataset.split_file is not");
        return load_dataset(dataset_root, dataset_split_file, synthetic_side);
    }
    return make_synthetic_bundle(synthetic_classes, synthetic_per_class, synthetic_side,
                                 synthetic_seed);
}

void RunConfig::validate() const {
    episode.validate();
    if (bench_episodes < 1) throw std::invalid_argument("bench.episodes must be >= 1");
    if (train_epochs < 1 || finetune_epochs < 1)
        throw std::invalid_argument("epoch counts must be >= 1");
    validate_method(replacement(train_max_blocks));
    validate_method(replacement(finetune_max_blocks));
    if (variants.empty()) throw std::invalid_argument("finetune.variant: empty list");
}

}  // namespace clr
