// scanet — train, pre-train, evaluate, run and benchmark the sky/cloud
// segmentation model. See README.md for the config schema and outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "scanet/bench.hpp"
#include "scanet/dataset.hpp"
#include "scanet/flops.hpp"
#include "scanet/half.hpp"
#include "scanet/train.hpp"

using json = nlohmann::json;
using namespace scanet;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitBadInput = 2;

struct Options {
    std::string config_path;
    std::string data_root;
    std::string init_ckpt;
    std::string out_dir = "out";
    std::string variant;
    std::string precision = "fp32";
    int synthetic = 0;
    int size = -1;
    int epochs = -1;
    int iters = 100;
    int warmup = 10;
    long long seed = -1;
    bool dump_stages = false;
    bool random_weights = false;
    std::string image_path;  // infer only
};

struct Settings {
    std::string variant = "lite";
    int size = 320;
    TrainConfig tc;
    std::string night_prefix = "night";
    bool augment_explicit = false;
};

[[noreturn]] void fail(int code, const std::string& msg) {
    std::fprintf(stderr, "scanet: %s\n", msg.c_str());
    std::exit(code);
}

Settings load_settings(const Options& opt, int default_epochs) {
    Settings s;
    s.tc.epochs = default_epochs;
    if (!opt.config_path.empty()) {
        std::ifstream f(opt.config_path);
        if (!f) fail(kExitBadInput, "cannot open config '" + opt.config_path + "'");
        json j;
        try {
            f >> j;
        } catch (const json::exception& e) {
            fail(kExitBadInput, "bad config '" + opt.config_path + "': " + e.what());
        }
        try {
            if (j.contains("variant")) s.variant = j["variant"].get<std::string>();
            if (j.contains("size")) s.size = j["size"].get<int>();
            if (j.contains("epochs")) s.tc.epochs = j["epochs"].get<int>();
            if (j.contains("batch_size")) s.tc.batch_size = j["batch_size"].get<int>();
            if (j.contains("lr0")) s.tc.lr0 = j["lr0"].get<float>();
            if (j.contains("beta1")) s.tc.beta1 = j["beta1"].get<float>();
            if (j.contains("beta2")) s.tc.beta2 = j["beta2"].get<float>();
            if (j.contains("eps")) s.tc.eps = j["eps"].get<float>();
            if (j.contains("gamma")) s.tc.gamma = j["gamma"].get<float>();
            if (j.contains("eval_every")) s.tc.eval_every = j["eval_every"].get<int>();
            if (j.contains("seed")) s.tc.seed = j["seed"].get<uint64_t>();
            if (j.contains("alpha")) {
                const auto a = j["alpha"].get<std::vector<float>>();
                if (a.size() != 4) throw std::runtime_error("alpha needs 4 entries");
                for (int i = 0; i < 4; ++i) s.tc.weights.alpha[i] = a[i];
            }
            if (j.contains("augment")) {
                s.tc.augment = j["augment"].get<bool>();
                s.augment_explicit = true;
            }
            if (j.contains("night_prefix")) s.night_prefix = j["night_prefix"].get<std::string>();
        } catch (const std::exception& e) {
            fail(kExitBadInput, "bad config '" + opt.config_path + "': " + std::string(e.what()));
        }
    }
    // Flags override file values.
    if (!opt.variant.empty()) s.variant = opt.variant;
    if (opt.size > 0) s.size = opt.size;
    if (opt.epochs >= 0) s.tc.epochs = opt.epochs;
    if (opt.seed >= 0) s.tc.seed = static_cast<uint64_t>(opt.seed);
    // Synthetic desk-scale runs are memorization probes; keep them raw unless
    // the config says otherwise.
    if (opt.synthetic > 0 && !s.augment_explicit) s.tc.augment = false;
    return s;
}

std::string settings_json(const Settings& s, const Options& opt) {
    json j;
    j["variant"] = s.variant;
    j["size"] = s.size;
    j["epochs"] = s.tc.epochs;
    j["batch_size"] = s.tc.batch_size;
    j["lr0"] = s.tc.lr0;
    j["beta1"] = s.tc.beta1;
    j["beta2"] = s.tc.beta2;
    j["eps"] = s.tc.eps;
    j["gamma"] = s.tc.gamma;
    j["eval_every"] = s.tc.eval_every;
    j["seed"] = s.tc.seed;
    j["alpha"] = s.tc.weights.alpha;
    j["augment"] = s.tc.augment;
    j["night_prefix"] = s.night_prefix;
    j["data"] = opt.synthetic > 0 ? "synthetic:" + std::to_string(opt.synthetic) : opt.data_root;
    return j.dump();
}

struct DataBundle {
    std::unique_ptr<SampleSource> train;
    std::unique_ptr<SampleSource> eval_all;
    std::unique_ptr<SampleSource> eval_day;
    std::unique_ptr<SampleSource> eval_night;
    bool has_night = false;
};

// Synthetic mode trains and evaluates on the same generated set; file mode
// uses the 9:1 split (train on 90%, evaluate on 10%).
DataBundle resolve_data(const Options& opt, const Settings& s) {
    DataBundle d;
    if (opt.synthetic > 0) {
        auto samples = synth_generate(opt.synthetic, s.size, s.tc.seed);
        d.train = std::make_unique<MemorySource>(samples, s.tc.seed);
        d.eval_all = std::make_unique<MemorySource>(std::move(samples), s.tc.seed);
        return d;
    }
    if (opt.data_root.empty()) {
        fail(kExitBadInput, "no data source: pass --data ROOT or --synthetic N");
    }
    if (!std::filesystem::is_directory(opt.data_root)) {
        fail(kExitBadInput, "dataset root '" + opt.data_root + "' does not exist");
    }
    DatasetIndex idx;
    try {
        idx = load_dataset(opt.data_root, s.tc.seed, s.night_prefix);
    } catch (const std::exception& e) {
        fail(kExitBadInput, e.what());
    }
    std::vector<DatasetPair> day, night;
    for (const auto& p : idx.test) (p.night ? night : day).push_back(p);
    d.has_night = !night.empty() && !day.empty();
    d.train = std::make_unique<FileSource>(idx.train, s.size, s.tc.seed);
    d.eval_all = std::make_unique<FileSource>(idx.test, s.size, s.tc.seed);
    if (d.has_night) {
        d.eval_day = std::make_unique<FileSource>(day, s.size, s.tc.seed);
        d.eval_night = std::make_unique<FileSource>(night, s.size, s.tc.seed);
    }
    std::printf("dataset: %zu train / %zu test pairs (split seed %llu)\n", idx.train.size(),
                idx.test.size(), static_cast<unsigned long long>(idx.seed));
    return d;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(kExitRuntime, "cannot write '" + path + "'");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string metrics_row(const std::string& subset, const Metrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", subset.c_str(),
                  m.accuracy, m.precision, m.recall, m.f_score, m.error_rate, m.miou);
    return buf;
}

void report_metrics(const std::string& path, const Scanet& model, const DataBundle& d) {
    std::string csv = "subset,accuracy,precision,recall,f_score,error_rate,miou\n";
    const Metrics all = evaluate(model, *d.eval_all, 0.5);
    csv += metrics_row("all", all);
    if (d.has_night) {
        csv += metrics_row("day", evaluate(model, *d.eval_day, 0.5));
        csv += metrics_row("night", evaluate(model, *d.eval_night, 0.5));
    }
    write_text(path, csv);
    std::printf("%s", csv.c_str());
    if (all.degenerate) {
        std::printf("note: a 0/0 metric ratio was defined as 1.0 (absent class)\n");
    }
}

Scanet model_from_checkpoint(const Options& opt, Checkpoint& ckpt_out) {
    if (opt.init_ckpt.empty()) {
        fail(kExitBadInput, "this command needs a checkpoint: pass --init CKPT");
    }
    try {
        ckpt_out = load_checkpoint(opt.init_ckpt);
    } catch (const std::exception& e) {
        fail(kExitBadInput, e.what());
    }
    std::string variant = "lite";
    int size = 320;
    const std::string cfg_str = ckpt_out.config_json();
    if (!cfg_str.empty()) {
        const json j = json::parse(cfg_str, nullptr, false);
        if (!j.is_discarded()) {
            if (j.contains("variant")) variant = j["variant"].get<std::string>();
            if (j.contains("size")) size = j["size"].get<int>();
        }
    }
    if (!opt.variant.empty() && opt.variant != variant) {
        fail(kExitBadInput, "checkpoint was built for variant '" + variant +
                                "' but --variant " + opt.variant + " was given");
    }
    if (opt.size > 0) size = opt.size;
    Scanet model(ScanetConfig::by_name(variant, size), 0);
    try {
        load_into(ckpt_out, model.params());
    } catch (const std::exception& e) {
        fail(kExitBadInput, std::string("checkpoint does not match the model: ") + e.what());
    }
    return model;
}

int cmd_train(const Options& opt) {
    Settings s = load_settings(opt, 100);
    DataBundle data = resolve_data(opt, s);
    Scanet model(ScanetConfig::by_name(s.variant, s.size), static_cast<uint32_t>(s.tc.seed));
    std::printf("model: %s @ %d, %lld parameters\n", s.variant.c_str(), s.size,
                model.param_count());
    if (!opt.init_ckpt.empty()) {
        const Checkpoint ckpt = load_checkpoint(opt.init_ckpt);
        const size_t n = load_matching(ckpt, model.params(), "backbone.");
        std::printf("initialized %zu backbone tensors from %s\n", n, opt.init_ckpt.c_str());
    }
    std::filesystem::create_directories(opt.out_dir);
    train(model, *data.train, data.eval_all.get(), s.tc, opt.out_dir, settings_json(s, opt));
    report_metrics(opt.out_dir + "/metrics.csv", model, data);
    std::printf("wrote %s/{history.csv,final.ckpt,best.ckpt,metrics.csv}\n", opt.out_dir.c_str());
    return 0;
}

int cmd_pretrain(const Options& opt) {
    Settings s = load_settings(opt, 50);
    DataBundle data = resolve_data(opt, s);
    std::vector<PatchSample> patches;
    size_t pos = 0, neg = 0, total_patches = 0;
    for (size_t i = 0; i < data.train->size(); ++i) {
        const Sample sample = data.train->get(i, 0, false);
        auto extracted = swpt_extract(sample.image, sample.mask);
        total_patches += 16;
        for (auto& p : extracted) {
            (p.positive ? pos : neg) += 1;
            patches.push_back(std::move(p));
        }
    }
    std::printf("patches: %zu positive, %zu negative, %zu ignored\n", pos, neg,
                total_patches - pos - neg);
    if (pos == 0 || neg == 0) {
        fail(kExitRuntime, "patch set contains a single class; cannot pre-train");
    }
    SwptModel model(ScanetConfig::by_name(s.variant, s.size),
                    static_cast<uint32_t>(s.tc.seed));
    const SwptResult r = pretrain_swpt(model, patches, s.tc);
    std::printf("patch-set accuracy: %.4f\n", r.accuracy);
    std::filesystem::create_directories(opt.out_dir);
    const std::string path = opt.out_dir + "/pretrained.ckpt";
    save_checkpoint(path, make_checkpoint(model.params, settings_json(s, opt), s.tc.epochs));
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_eval(const Options& opt) {
    Checkpoint ckpt;
    const Scanet model = model_from_checkpoint(opt, ckpt);
    Options data_opt = opt;
    data_opt.size = model.config().input_size;
    Settings s = load_settings(data_opt, 1);
    s.size = model.config().input_size;
    DataBundle data = resolve_data(data_opt, s);
    if (data.eval_all->size() == 0) fail(kExitBadInput, "evaluation set is empty");
    std::filesystem::create_directories(opt.out_dir);
    report_metrics(opt.out_dir + "/metrics.csv", model, data);
    std::printf("wrote %s/metrics.csv\n", opt.out_dir.c_str());
    return 0;
}

int cmd_infer(const Options& opt) {
    Checkpoint ckpt;
    const Scanet model = model_from_checkpoint(opt, ckpt);
    ImageU8 src;
    try {
        src = load_image(opt.image_path);
    } catch (const std::exception& e) {
        fail(kExitBadInput, e.what());
    }
    const int size = model.config().input_size;
    DatasetPair pair{opt.image_path, "", std::filesystem::path(opt.image_path).stem().string(),
                     false};

    // Normalize exactly like the training pipeline, without a mask.
    ImageU8 rgb = src;
    if (rgb.channels == 1) {
        ImageU8 expanded;
        expanded.width = rgb.width;
        expanded.height = rgb.height;
        expanded.channels = 3;
        expanded.pixels.resize(static_cast<size_t>(rgb.width) * rgb.height * 3);
        for (size_t i = 0; i < rgb.pixels.size(); ++i) {
            expanded.pixels[3 * i] = expanded.pixels[3 * i + 1] = expanded.pixels[3 * i + 2] =
                rgb.pixels[i];
        }
        rgb = std::move(expanded);
    }
    if (rgb.width != size || rgb.height != size) rgb = resize_bilinear(rgb, size, size);
    Tensor input({1, 3, size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c)
                input.at(0, c, y, x) = static_cast<float>(rgb.at(y, x, c)) / 255.0f - 0.5f;

    Ctx ctx;
    const StageOutputs out = model.forward(ctx, input, false);

    std::filesystem::create_directories(opt.out_dir);
    const Tensor prob = resize_map_bilinear(out.s[3], src.height, src.width);
    save_pgm(opt.out_dir + "/" + pair.stem + "_mask.pgm", mask_to_u8(prob));
    if (opt.dump_stages) {
        for (int i = 0; i < 4; ++i) {
            save_pgm(opt.out_dir + "/" + pair.stem + "_s" + std::to_string(i + 1) + ".pgm",
                     prob_map_to_u8(out.s[i]));
        }
        for (int i = 0; i < 3; ++i) {
            // Multi-channel background masks are dumped as their channel mean.
            const Tensor& m = out.m[i];
            Tensor mono({1, 1, m.h(), m.w()});
            for (int y = 0; y < m.h(); ++y)
                for (int x = 0; x < m.w(); ++x) {
                    double acc = 0;
                    for (int c = 0; c < m.c(); ++c) acc += m.at(0, c, y, x);
                    mono.at(0, 0, y, x) = static_cast<float>(acc / m.c());
                }
            save_pgm(opt.out_dir + "/" + pair.stem + "_m" + std::to_string(i + 2) + ".pgm",
                     prob_map_to_u8(mono));
        }
    }
    std::printf("wrote %s/%s_mask.pgm%s\n", opt.out_dir.c_str(), pair.stem.c_str(),
                opt.dump_stages ? " and 7 stage maps" : "");
    return 0;
}

int cmd_curves(const Options& opt) {
    Checkpoint ckpt;
    const Scanet model = model_from_checkpoint(opt, ckpt);
    Options data_opt = opt;
    data_opt.size = model.config().input_size;
    Settings s = load_settings(data_opt, 1);
    s.size = model.config().input_size;
    DataBundle data = resolve_data(data_opt, s);
    if (data.eval_all->size() == 0) fail(kExitBadInput, "test set is empty");

    std::filesystem::create_directories(opt.out_dir);
    const auto emit = [&](const SampleSource& src, const std::string& tag) {
        std::vector<Tensor> preds, gts;
        Ctx ctx;
        for (size_t i = 0; i < src.size(); ++i) {
            const Sample sample = src.get(i, 0, false);
            preds.push_back(model.forward(ctx, sample.image, false).s[3]);
            gts.push_back(sample.mask);
        }
        write_text(opt.out_dir + "/pr_" + tag + ".csv", pr_curve_csv(pr_curve(preds, gts, 256)));
        write_text(opt.out_dir + "/fm_" + tag + ".csv",
                   f_measure_curve_csv(f_measure_curve(preds, gts, 256)));
    };
    emit(*data.eval_all, "all");
    if (data.has_night) {
        emit(*data.eval_day, "day");
        emit(*data.eval_night, "night");
    }
    std::printf("wrote PR and F-measure CSVs to %s\n", opt.out_dir.c_str());
    return 0;
}

int cmd_bench(const Options& opt) {
    Scanet model = [&] {
        if (opt.random_weights) {
            const Settings s = load_settings(opt, 1);
            return Scanet(ScanetConfig::by_name(s.variant.empty() ? "lite" : s.variant, s.size),
                          static_cast<uint32_t>(opt.seed < 0 ? 0 : opt.seed));
        }
        Checkpoint ckpt;
        return model_from_checkpoint(opt, ckpt);
    }();
    const BenchReport r = run_bench(model, opt.precision, opt.iters, opt.warmup);
    std::printf("variant %s  precision %s  iters %d (+%d warmup)\n", r.variant.c_str(),
                r.precision.c_str(), r.iterations, r.warmup);
    std::printf("latency  mean %.3f ms  p50 %.3f ms  p95 %.3f ms\n", r.mean_ms, r.p50_ms,
                r.p95_ms);
    std::printf("throughput %.2f images/s\n", r.throughput);
    std::printf("flops %.3f MFLOPs (%s)\n", static_cast<double>(r.flops) / 1e6,
                r.flop_convention.c_str());
    std::filesystem::create_directories(opt.out_dir);
    write_text(opt.out_dir + "/bench.csv", bench_csv(r));
    return 0;
}

void add_common(CLI::App* cmd, Options& opt, bool with_data) {
    cmd->add_option("--config", opt.config_path, "JSON config file (flags override)");
    cmd->add_option("--seed", opt.seed, "Seed for init, split, shuffling and synthesis");
    cmd->add_option("--variant", opt.variant, "Model variant: lite|base");
    cmd->add_option("--size", opt.size, "Input resolution (divisible by 16)");
    cmd->add_option("--out", opt.out_dir, "Output directory");
    if (with_data) {
        cmd->add_option("--data", opt.data_root, "Dataset root with images/ and GTmaps/");
        cmd->add_option("--synthetic", opt.synthetic, "Generate N synthetic samples instead");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SCANet sky/cloud segmentation"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
    add_common(train_cmd, opt, true);
    train_cmd->add_option("--epochs", opt.epochs, "Training epochs");
    train_cmd->add_option("--init", opt.init_ckpt, "Backbone checkpoint to initialize from");

    CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "Patch-level backbone pre-training");
    add_common(pretrain_cmd, opt, true);
    pretrain_cmd->add_option("--epochs", opt.epochs, "Pre-training epochs");

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(eval_cmd, opt, true);
    eval_cmd->add_option("--init", opt.init_ckpt, "Model checkpoint");

    CLI::App* infer_cmd = app.add_subcommand("infer", "Segment one image");
    add_common(infer_cmd, opt, false);
    infer_cmd->add_option("--init", opt.init_ckpt, "Model checkpoint");
    infer_cmd->add_option("image", opt.image_path, "Input image")->required();
    infer_cmd->add_flag("--dump-stages", opt.dump_stages,
                        "Write the stage predictions and background masks");

    CLI::App* curves_cmd = app.add_subcommand("curves", "PR and F-measure curves");
    add_common(curves_cmd, opt, true);
    curves_cmd->add_option("--init", opt.init_ckpt, "Model checkpoint");

    CLI::App* bench_cmd = app.add_subcommand("bench", "Latency benchmark");
    add_common(bench_cmd, opt, false);
    bench_cmd->add_option("--init", opt.init_ckpt, "Model checkpoint");
    bench_cmd->add_flag("--random-weights", opt.random_weights, "Bench a fresh model");
    bench_cmd->add_option("--precision", opt.precision, "fp32|fp16");
    bench_cmd->add_option("--iters", opt.iters, "Timed iterations");
    bench_cmd->add_option("--warmup", opt.warmup, "Warmup iterations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(opt);
        if (pretrain_cmd->parsed()) return cmd_pretrain(opt);
        if (eval_cmd->parsed()) return cmd_eval(opt);
        if (infer_cmd->parsed()) return cmd_infer(opt);
        if (curves_cmd->parsed()) return cmd_curves(opt);
        if (bench_cmd->parsed()) return cmd_bench(opt);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "scanet: %s\n", e.what());
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "scanet: %s\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
