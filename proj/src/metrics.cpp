#include "scanet/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace scanet {

namespace {

// 0/0 -> 1.0 (perfect on an absent class), flagged by the caller.
double ratio(uint64_t num, uint64_t den, bool& degenerate) {
    if (den == 0) {
        degenerate = true;
        return 1.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts tally_at_threshold(const Tensor& pred, const Tensor& gt, double threshold) {
    if (!(pred.shape() == gt.shape())) {
        throw std::invalid_argument("confusion: shape mismatch between prediction " +
                                    to_string(pred.shape()) + " and ground truth " +
                                    to_string(gt.shape()));
    }
    ConfusionCounts c;
    const float t = static_cast<float>(threshold);
    const float* pp = pred.data();
    const float* gp = gt.data();
    for (size_t i = 0; i < pred.size(); ++i) {
        const bool hit = pp[i] >= t;
        const bool pos = gp[i] >= 0.5f;
        if (hit && pos) ++c.tp;
        else if (hit && !pos) ++c.fp;
        else if (!hit && pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

ConfusionCounts confusion_from_masks(const Tensor& pred, const Tensor& gt, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("confusion_from_masks: threshold must be in (0, 1)");
    }
    return tally_at_threshold(pred, gt, threshold);
}

Metrics metrics_from_counts(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw std::invalid_argument("metrics_from_counts: empty confusion counts");
    }
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.error_rate = 1.0 - m.accuracy;  // (fp+fn)/total, kept exactly complementary
    m.precision = ratio(c.tp, c.tp + c.fp, m.degenerate);
    m.recall = ratio(c.tp, c.tp + c.fn, m.degenerate);
    if (m.precision + m.recall == 0.0) {
        m.degenerate = true;
        m.f_score = 0.0;
    } else {
        m.f_score = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    bool deg_pos = false, deg_neg = false;
    const double miou_pos = ratio(c.tp, c.fn + c.fp + c.tp, deg_pos);
    const double miou_neg = ratio(c.tn, c.tn + c.fn + c.fp, deg_neg);
    m.degenerate = m.degenerate || deg_pos || deg_neg;
    m.miou = 0.5 * (miou_pos + miou_neg);
    return m;
}

namespace {

std::vector<std::pair<double, ConfusionCounts>> sweep(const std::vector<Tensor>& preds,
                                                      const std::vector<Tensor>& gts,
                                                      int n_points) {
    if (preds.empty() || preds.size() != gts.size()) {
        throw std::invalid_argument("curve sweep: need equal-length nonempty prediction and "
                                    "ground-truth lists");
    }
    if (n_points < 2) throw std::invalid_argument("curve sweep: n_points must be >= 2");
    std::vector<std::pair<double, ConfusionCounts>> out;
    out.reserve(static_cast<size_t>(n_points));
    for (int kpt = 0; kpt < n_points; ++kpt) {
        const double t = static_cast<double>(kpt) / (n_points - 1);
        ConfusionCounts pooled;
        for (size_t i = 0; i < preds.size(); ++i) {
            pooled += tally_at_threshold(preds[i], gts[i], t);
        }
        out.emplace_back(t, pooled);
    }
    return out;
}

}  // namespace

std::vector<PrPoint> pr_curve(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                              int n_points) {
    std::vector<PrPoint> points;
    for (const auto& [t, c] : sweep(preds, gts, n_points)) {
        const Metrics m = metrics_from_counts(c);
        points.push_back({t, m.precision, m.recall});
    }
    return points;
}

std::vector<FmPoint> f_measure_curve(const std::vector<Tensor>& preds,
                                     const std::vector<Tensor>& gts, int n_points) {
    std::vector<FmPoint> points;
    for (const auto& [t, c] : sweep(preds, gts, n_points)) {
        points.push_back({t, metrics_from_counts(c).f_score});
    }
    return points;
}

std::string pr_curve_csv(const std::vector<PrPoint>& points) {
    std::string out = "threshold,precision,recall\n";
    char buf[96];
    for (const PrPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", p.threshold, p.precision, p.recall);
        out += buf;
    }
    return out;
}

std::string f_measure_curve_csv(const std::vector<FmPoint>& points) {
    std::string out = "threshold,f_score\n";
    char buf[64];
    for (const FmPoint& p : points) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", p.threshold, p.f_score);
        out += buf;
    }
    return out;
}

}  // namespace scanet
