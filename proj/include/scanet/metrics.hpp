#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scanet/tensor.hpp"

namespace scanet {

// Pixel tallies; cloud is the positive class.
struct ConfusionCounts {
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    uint64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
};

struct Metrics {
    double accuracy = 0, precision = 0, recall = 0, f_score = 0, error_rate = 0, miou = 0;
    bool degenerate = false;  // some 0/0 ratio was defined as 1.0 (absent class)
};

// Tallies pred >= threshold against a binary ground truth. threshold must be
// in (0, 1).
ConfusionCounts confusion_from_masks(const Tensor& pred, const Tensor& gt, double threshold);

// Unvalidated tally used by the curve sweeps (thresholds may touch 0 and 1).
ConfusionCounts tally_at_threshold(const Tensor& pred, const Tensor& gt, double threshold);

Metrics metrics_from_counts(const ConfusionCounts& c);

struct PrPoint {
    double threshold = 0, precision = 0, recall = 0;
};
struct FmPoint {
    double threshold = 0, f_score = 0;
};

// Micro-averaged curves: counts are pooled over the whole set at thresholds
// k/(n_points-1), k = 0..n_points-1.
std::vector<PrPoint> pr_curve(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                              int n_points = 256);
std::vector<FmPoint> f_measure_curve(const std::vector<Tensor>& preds,
                                     const std::vector<Tensor>& gts, int n_points = 256);

// CSV serialization: "threshold,precision,recall" / "threshold,f_score",
// one row per point, 6 decimal places.
std::string pr_curve_csv(const std::vector<PrPoint>& points);
std::string f_measure_curve_csv(const std::vector<FmPoint>& points);

}  // namespace scanet
