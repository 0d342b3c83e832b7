#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scanet/checkpoint.hpp"
#include "scanet/dataset.hpp"
#include "scanet/metrics.hpp"
#include "scanet/model.hpp"
#include "scanet/optim.hpp"

namespace scanet {

// Deterministic sample provider. get() must be a pure function of
// (index, epoch, augment) so parallel and serial batch assembly agree.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual size_t size() const = 0;
    virtual Sample get(size_t index, int epoch, bool augment) const = 0;
    virtual bool is_night(size_t) const { return false; }
};

// In-memory samples (synthetic sets); augmentation flips the stored tensors.
class MemorySource : public SampleSource {
public:
    MemorySource(std::vector<Sample> samples, uint64_t seed)
        : samples_(std::move(samples)), seed_(seed) {}
    size_t size() const override { return samples_.size(); }
    Sample get(size_t index, int epoch, bool augment) const override;
    bool is_night(size_t index) const override { return samples_[index].night; }
    const std::vector<Sample>& samples() const { return samples_; }

private:
    std::vector<Sample> samples_;
    uint64_t seed_;
};

// Decodes and prepares file pairs on demand.
class FileSource : public SampleSource {
public:
    FileSource(std::vector<DatasetPair> pairs, int target_size, uint64_t seed)
        : pairs_(std::move(pairs)), target_size_(target_size), seed_(seed) {}
    size_t size() const override { return pairs_.size(); }
    Sample get(size_t index, int epoch, bool augment) const override;
    bool is_night(size_t index) const override { return pairs_[index].night; }

private:
    std::vector<DatasetPair> pairs_;
    int target_size_;
    uint64_t seed_;
};

struct HistoryRow {
    int epoch = 0;  // 1-based
    double loss = 0;
    double lr = 0;
    std::optional<Metrics> eval;
};

struct TrainResult {
    std::vector<HistoryRow> history;
    int best_epoch = 0;  // epoch of the best eval MIoU; 0 if never evaluated
    double best_miou = 0;
};

// CSV: epoch,loss,lr,accuracy,precision,recall,f_score,error_rate,miou with
// metric cells empty on epochs without an evaluation.
std::string history_csv(const std::vector<HistoryRow>& rows);

// Pooled confusion of the final stage prediction over the whole source, eval
// mode, threshold 0.5.
Metrics evaluate(const Scanet& model, const SampleSource& data, double threshold = 0.5);
ConfusionCounts evaluate_counts(const Scanet& model, const SampleSource& data, double threshold);

// Full training loop: per epoch seeded shuffle, batched forward, weighted
// deep-supervision loss, backward, Adam step, explicit grad zeroing;
// evaluates every eval_every epochs (and on the last). When out_dir is
// nonempty, writes history.csv plus final.ckpt and best.ckpt (best test
// MIoU). config_json is echoed into the checkpoints. Aborts on NaN loss.
TrainResult train(Scanet& model, const SampleSource& train_data, const SampleSource* eval_data,
                  const TrainConfig& cfg, const std::string& out_dir,
                  const std::string& config_json = "", bool quiet = false);

// Backbone + global-average-pool + 1-unit FC head + sigmoid, for SWPT patch
// classification.
struct SwptModel {
    ScanetConfig cfg;
    ParamStore params;
    Backbone backbone;
    Tensor fc_weight, fc_bias;

    SwptModel(const ScanetConfig& cfg, uint32_t seed);
    Tensor forward(Ctx& ctx, const Tensor& patches, bool training) const;
};

struct SwptResult {
    std::vector<double> epoch_loss;
    double accuracy = 0;  // on the patch set, threshold 0.5
};

// BCE patch-label pre-training. Requires both labels present. The FC head
// stays in model.params under "swpt_head.*"; checkpoint consumers pull the
// "backbone." prefix and drop the head.
SwptResult pretrain_swpt(SwptModel& model, const std::vector<PatchSample>& patches,
                         const TrainConfig& cfg, bool quiet = false);

}  // namespace scanet
