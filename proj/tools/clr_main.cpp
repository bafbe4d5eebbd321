// Command-line front end: train / eval / ablate / synth-data / dump-aug.
// Every config key can come from a key=value file (--config=FILE) or be
// overridden with --key=value flags.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "clr/bench.hpp"
#include "clr/checkpoint.hpp"
#include "clr/config.hpp"
#include "clr/png_io.hpp"

namespace fs = std::filesystem;
using namespace clr;

namespace {

void print_usage() {
    std::cout <<
        R"(usage: clr <command> [--config=FILE] [--key=value ...] [command options]

commands:
  train       train the backbone on the (augmented) train split and write
              <out_dir>/backbone.ckpt, backbone.meta, train_losses.csv
  eval        fine-tune and score the configured variants episodically;
              writes summary.csv, episodes.csv, report.txt
              options: --trace (trace.jsonl), --dump-embeddings (embeddings.csv)
  ablate      block-count grid: trains one backbone per train setting
              options: --train-blocks=0,3,6,9 --ft-blocks=0,3,6,9
  synth-data  export the synthetic dataset as PNG directories + split file
              under <out_dir>/dataset
  dump-aug    write before/after PNG pairs for the configured replacement
              operator under <out_dir>/aug; option: --pairs=N (default 8)

config keys (settable via file or --key=value):
)" << config_keys_help();
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    if (out.empty()) throw std::invalid_argument("empty list: " + s);
    return out;
}

struct CliArgs {
    RunConfig config;
    bool trace = false;
    bool dump_embeddings = false;
    int pairs = 8;
    std::vector<int> train_blocks = {0, 3, 6, 9};
    std::vector<int> ft_blocks = {0, 3, 6, 9};
};

CliArgs parse_args(int argc, char** argv) {
    CliArgs args;
    // config file first so flags override it, matching documented precedence
    std::vector<std::pair<std::string, std::string>> overrides;
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) != 0) throw std::invalid_argument("unexpected argument: " + arg);
        arg = arg.substr(2);
        const auto eq = arg.find('=');
        const std::string key = eq == std::string::npos ? arg : arg.substr(0, eq);
        const std::string value = eq == std::string::npos ? "" : arg.substr(eq + 1);
        if (key == "config") {
            apply_config_file(args.config, value);
        } else if (key == "trace") {
            args.trace = true;
        } else if (key == "dump-embeddings") {
            args.dump_embeddings = true;
        } else if (key == "pairs") {
            args.pairs = std::stoi(value);
        } else if (key == "train-blocks") {
            args.train_blocks = parse_int_list(value);
        } else if (key == "ft-blocks") {
            args.ft_blocks = parse_int_list(value);
        } else {
            overrides.emplace_back(key, value);
        }
    }
    for (const auto& [key, value] : overrides) apply_config_key(args.config, key, value);
    args.config.validate();
    return args;
}

std::map<std::string, std::string> backbone_meta(const RunConfig& config) {
    const BackboneConfig b = config.train_config().backbone;
    return {{"in_channels", std::to_string(b.in_channels)},
            {"input_side", std::to_string(b.input_side)},
            {"conv_blocks", std::to_string(b.conv_blocks)},
            {"channels", std::to_string(b.channels)},
            {"kernel", std::to_string(b.kernel)},
            {"head", head_kind_name(config.head)}};
}

ModelState load_model(const RunConfig& config) {
    const fs::path ckpt = fs::path(config.out_dir) / "backbone.ckpt";
    const fs::path meta_path = fs::path(config.out_dir) / "backbone.meta";
    if (!fs::exists(ckpt))
        throw std::runtime_error("no checkpoint at " + ckpt.string() +
                                 " (run `clr train` first)");
    const auto meta = load_sidecar(meta_path.string());
    BackboneConfig b;
    b.in_channels = std::stoi(meta.at("in_channels"));
    b.input_side = std::stoi(meta.at("input_side"));
    b.conv_blocks = std::stoi(meta.at("conv_blocks"));
    b.channels = std::stoi(meta.at("channels"));
    b.kernel = std::stoi(meta.at("kernel"));
    if (b.input_side != config.synthetic_side)
        throw std::runtime_error("checkpoint expects side " + std::to_string(b.input_side) +
                                 " but the config requests " +
                                 std::to_string(config.synthetic_side));
    ModelState model;
    model.backbone = Backbone::from_params(b, load_checkpoint(ckpt.string()));
    freeze_backbone(model);
    return model;
}

int cmd_train(const CliArgs& args) {
    const RunConfig& config = args.config;
    fs::create_directories(config.out_dir);
    std::cout << "loading dataset...\n";
    const DatasetBundle data = config.load_data();
    std::cout << "train split: " << data.train.size() << " samples over "
              << data.train.classes().size() << " classes\n";

    Rng rng(backbone_train_seed(config));
    TrainResult result = train_backbone(data.train, config.train_config(), rng);

    const fs::path out(config.out_dir);
    save_checkpoint(result.model.backbone.params(), (out / "backbone.ckpt").string());
    save_sidecar(backbone_meta(config), (out / "backbone.meta").string());
    std::ofstream losses(out / "train_losses.csv", std::ios::trunc);
    losses << "epoch,loss\n";
    for (std::size_t i = 0; i < result.epoch_losses.size(); ++i)
        losses << i + 1 << ',' << result.epoch_losses[i] << '\n';

    std::cout << "epoch 1 loss " << result.epoch_losses.front() << " -> epoch "
              << result.epoch_losses.size() << " loss " << result.epoch_losses.back() << '\n';
    std::cout << "wrote " << (out / "backbone.ckpt").string() << '\n';
    return 0;
}

int cmd_eval(const CliArgs& args) {
    const RunConfig& config = args.config;
    fs::create_directories(config.out_dir);
    const DatasetBundle data = config.load_data();
    const ModelState model = load_model(config);

    ProtocolOptions options;
    options.trace = args.trace;
    const ProtocolResult result = run_protocol(config, model, data.test, options);

    const fs::path out(config.out_dir);
    write_summary_csv(result.summaries, (out / "summary.csv").string());
    write_episodes_csv(result.summaries, (out / "episodes.csv").string());
    write_text_table(result.summaries, (out / "report.txt").string());
    if (args.trace) write_trace_jsonl(result, (out / "trace.jsonl").string());
    if (args.dump_embeddings)
        write_embeddings_csv(model, data.test, (out / "embeddings.csv").string());

    for (const auto& s : result.summaries)
        std::printf("%-10s %6.2f +/- %.2f  (%d episodes)\n", s.variant.c_str(), s.mean_acc_pct,
                    s.ci95_pct, s.episodes);
    if (result.freeze_violations > 0) {
        std::fprintf(stderr, "freeze contract violated %d times\n", result.freeze_violations);
        return 2;
    }
    return 0;
}

int cmd_ablate(const CliArgs& args) {
    const RunConfig& config = args.config;
    fs::create_directories(config.out_dir);
    const DatasetBundle data = config.load_data();
    const AblationResult result =
        ablation_grid(args.train_blocks, args.ft_blocks, config, data);
    const fs::path out(config.out_dir);
    write_ablation_csv(result, (out / "ablation.csv").string());
    write_ablation_table(result, (out / "ablation.txt").string());
    std::cout << "wrote " << (out / "ablation.csv").string() << '\n';
    return 0;
}

int cmd_synth_data(const CliArgs& args) {
    const RunConfig& config = args.config;
    const DatasetBundle data = make_synthetic_bundle(config.synthetic_classes,
                                                     config.synthetic_per_class,
                                                     config.synthetic_side, config.synthetic_seed);
    const fs::path root = fs::path(config.out_dir) / "dataset";
    export_png_dataset(data, root.string());
    std::cout << "wrote " << (data.train.size() + data.test.size()) << " images under "
              << root.string() << '\n';
    return 0;
}

int cmd_dump_aug(const CliArgs& args) {
    const RunConfig& config = args.config;
    const DatasetBundle data = config.load_data();
    const fs::path out = fs::path(config.out_dir) / "aug";
    fs::create_directories(out);

    const ReplacementMethod method = config.replacement(config.finetune_max_blocks);
    Rng rng(Rng::derive(config.master_seed, kStreamReplace));
    const LabeledDataset& ds = data.train;
    for (int i = 0; i < args.pairs; ++i) {
        const auto& target = ds.sample(rng.uniform_int(ds.size()));
        const auto outcome = synthesize_training_image(target, ds, method, rng);
        std::ostringstream base;
        base << "pair_" << i << "_" << method_name(method);
        write_png(target.pixels, (out / (base.str() + "_before.png")).string());
        write_png(outcome.image, (out / (base.str() + "_after.png")).string());
    }
    std::cout << "wrote " << args.pairs << " before/after pairs under " << out.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage();
        return 1;
    }
    const std::string command = argv[1];
    if (command == "help" || command == "--help" || command == "-h") {
        print_usage();
        return 0;
    }
    try {
        const CliArgs args = parse_args(argc, argv);
        if (command == "train") return cmd_train(args);
        if (command == "eval") return cmd_eval(args);
        if (command == "ablate") return cmd_ablate(args);
        if (command == "synth-data") return cmd_synth_data(args);
        if (command == "dump-aug") return cmd_dump_aug(args);
        std::cerr << "unknown command: " << command << "\n\n";
        print_usage();
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
