#include "scanet/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace scanet {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
    uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xC2B2AE3D27D4EB4Full);
    z ^= z >> 29;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 32;
    return z;
}

// Stacks per-sample tensors (leading dim 1) into one batch tensor.
Tensor stack(const std::vector<Tensor>& ts) {
    const Shape4 s = ts.front().shape();
    Tensor out({static_cast<int>(ts.size()), s.c, s.h, s.w});
    const size_t per = ts.front().size();
    for (size_t i = 0; i < ts.size(); ++i) {
        std::copy(ts[i].data(), ts[i].data() + per, out.data() + i * per);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace

Sample MemorySource::get(size_t index, int epoch, bool augment) const {
    Sample s = samples_[index];
    if (augment) {
        Rng rng(mix_seed(seed_, static_cast<uint64_t>(epoch), index + 1));
        apply_flips(s, (rng.next_u32() & 0x80000000u) != 0, (rng.next_u32() & 0x80000000u) != 0);
    }
    return s;
}

Sample FileSource::get(size_t index, int epoch, bool augment) const {
    Rng rng(mix_seed(seed_, static_cast<uint64_t>(epoch), index + 1));
    return prepare(pairs_[index], target_size_, augment, rng);
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
    std::string out = "epoch,loss,lr,accuracy,precision,recall,f_score,error_rate,miou\n";
    char buf[256];
    for (const HistoryRow& r : rows) {
        if (r.eval) {
            const Metrics& m = *r.eval;
            std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          r.epoch, r.loss, r.lr, m.accuracy, m.precision, m.recall, m.f_score,
                          m.error_rate, m.miou);
        } else {
            std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,,,,,,\n", r.epoch, r.loss, r.lr);
        }
        out += buf;
    }
    return out;
}

ConfusionCounts evaluate_counts(const Scanet& model, const SampleSource& data, double threshold) {
    ConfusionCounts pooled;
    Ctx ctx;
    for (size_t i = 0; i < data.size(); ++i) {
        const Sample s = data.get(i, 0, false);
        const StageOutputs out = model.forward(ctx, s.image, false);
        pooled += tally_at_threshold(out.s[3], s.mask, threshold);
    }
    return pooled;
}

Metrics evaluate(const Scanet& model, const SampleSource& data, double threshold) {
    if (data.size() == 0) throw std::invalid_argument("evaluate: empty sample source");
    return metrics_from_counts(evaluate_counts(model, data, threshold));
}

TrainResult train(Scanet& model, const SampleSource& train_data, const SampleSource* eval_data,
                  const TrainConfig& cfg, const std::string& out_dir,
                  const std::string& config_json, bool quiet) {
    cfg.validate();
    if (train_data.size() == 0) throw std::invalid_argument("train: empty training set");

    AdamState opt = AdamState::create(model.params());
    model.params().zero_grad();

    TrainResult result;
    ParamStore best_params;
    int best_epoch = 0;
    double best_miou = -1.0;

    std::vector<size_t> order(train_data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Seeded per-epoch shuffle.
        Rng shuffle_rng(mix_seed(cfg.seed, 0x73687566ull + static_cast<uint64_t>(epoch)));
        for (size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[shuffle_rng.next_u32() % (i + 1)]);
        }

        const double lr = lr_at(epoch - 1, cfg);
        double loss_sum = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Tensor> images, masks;
            images.reserve(end - start);
            masks.reserve(end - start);
            for (size_t i = start; i < end; ++i) {
                const Sample s = train_data.get(order[i], epoch, cfg.augment);
                images.push_back(s.image);
                masks.push_back(s.mask);
            }
            Tensor batch = stack(images);
            Tensor gt = stack(masks);

            Tape tape;
            Ctx ctx = Ctx::training(tape);
            const StageOutputs out = model.forward(ctx, batch, true);
            Tensor loss = total_loss(ctx, out.s, gt, cfg.weights);
            const double loss_v = loss.item();
            if (!std::isfinite(loss_v)) {
                throw std::runtime_error("training loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(start / cfg.batch_size));
            }
            tape.backward(loss);
            adam_step(model.params(), opt, lr, cfg);
            model.params().zero_grad();
            loss_sum += loss_v * static_cast<double>(end - start);
            seen += end - start;
        }

        HistoryRow row;
        row.epoch = epoch;
        row.loss = loss_sum / static_cast<double>(seen);
        row.lr = lr;
        const bool do_eval =
            eval_data && eval_data->size() > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
        if (do_eval) {
            row.eval = evaluate(model, *eval_data, 0.5);
            if (row.eval->miou > best_miou) {
                best_miou = row.eval->miou;
                best_epoch = epoch;
                best_params = model.params().clone();
            }
        }
        if (!quiet) {
            std::printf("epoch %3d  loss %.6f  lr %.3g", epoch, row.loss, row.lr);
            if (row.eval) std::printf("  acc %.4f  miou %.4f", row.eval->accuracy, row.eval->miou);
            std::printf("\n");
            std::fflush(stdout);
        }
        result.history.push_back(std::move(row));
    }
    result.best_epoch = best_epoch;
    result.best_miou = best_miou < 0 ? 0 : best_miou;

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text(out_dir + "/history.csv", history_csv(result.history));
        save_checkpoint(out_dir + "/final.ckpt",
                        make_checkpoint(model.params(), config_json, cfg.epochs, &opt));
        const ParamStore& bp = best_epoch > 0 ? best_params : model.params();
        save_checkpoint(out_dir + "/best.ckpt",
                        make_checkpoint(bp, config_json, best_epoch > 0 ? best_epoch : cfg.epochs));
    }
    return result;
}

SwptModel::SwptModel(const ScanetConfig& config, uint32_t seed) : cfg(config) {
    cfg.validate();
    Rng rng(seed);
    backbone = Backbone::create(params, cfg, rng);
    const int c = cfg.tap_widths[3];
    Tensor w({1, c, 1, 1});
    const float bound = 1.0f / std::sqrt(static_cast<float>(c));
    for (float& v : w.values()) v = rng.uniform(-bound, bound);
    fc_weight = params.add_param("swpt_head.fc.weight", std::move(w));
    fc_bias = params.add_param("swpt_head.fc.bias", Tensor::zeros({1, 1, 1, 1}));
}

Tensor SwptModel::forward(Ctx& ctx, const Tensor& patches, bool training) const {
    const auto taps = backbone.forward(ctx, patches, training);
    Tensor pooled = ops::global_avg_pool(ctx, taps[3]);
    return ops::sigmoid(ctx, ops::fully_connected(ctx, pooled, fc_weight, fc_bias));
}

SwptResult pretrain_swpt(SwptModel& model, const std::vector<PatchSample>& patches,
                         const TrainConfig& cfg, bool quiet) {
    cfg.validate();
    size_t pos = 0;
    for (const PatchSample& p : patches) pos += p.positive ? 1 : 0;
    if (patches.empty() || pos == 0 || pos == patches.size()) {
        throw std::runtime_error("pretrain_swpt: patch set must contain both classes (" +
                                 std::to_string(pos) + " positive of " +
                                 std::to_string(patches.size()) + ")");
    }

    AdamState opt = AdamState::create(model.params);
    model.params.zero_grad();
    SwptResult result;

    std::vector<size_t> order(patches.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.seed, 0x50727400ull + static_cast<uint64_t>(epoch)));
        for (size_t i = order.size() - 1; i > 0; --i) {
            std::swap(order[i], order[shuffle_rng.next_u32() % (i + 1)]);
        }
        const double lr = lr_at(epoch - 1, cfg);
        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Tensor> imgs;
            Tensor labels({static_cast<int>(end - start), 1, 1, 1});
            for (size_t i = start; i < end; ++i) {
                imgs.push_back(patches[order[i]].patch);
                labels.data()[i - start] = patches[order[i]].positive ? 1.0f : 0.0f;
            }
            Tensor batch = stack(imgs);
            Tape tape;
            Ctx ctx = Ctx::training(tape);
            Tensor pred = model.forward(ctx, batch, true);
            Tensor loss = bce_loss(ctx, pred, labels);
            const double loss_v = loss.item();
            if (!std::isfinite(loss_v)) {
                throw std::runtime_error("pre-training loss diverged at epoch " +
                                         std::to_string(epoch));
            }
            tape.backward(loss);
            adam_step(model.params, opt, lr, cfg);
            model.params.zero_grad();
            loss_sum += loss_v * static_cast<double>(end - start);
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(patches.size()));
        if (!quiet && (epoch % 10 == 0 || epoch == cfg.epochs)) {
            std::printf("swpt epoch %3d  loss %.6f\n", epoch, result.epoch_loss.back());
            std::fflush(stdout);
        }
    }

    // Patch-set accuracy at threshold 0.5, eval mode.
    size_t correct = 0;
    Ctx ctx;
    for (const PatchSample& p : patches) {
        const float pred = model.forward(ctx, p.patch, false).item();
        if ((pred >= 0.5f) == p.positive) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(patches.size());
    return result;
}

}  // namespace scanet
