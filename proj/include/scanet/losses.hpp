#pragma once

#include <array>

#include "scanet/ops.hpp"

namespace scanet {

// Deep-supervision coefficients alpha_1..alpha_4; at least one must be > 0.
struct LossWeights {
    std::array<float, 4> alpha{1.0f, 1.0f, 1.0f, 1.0f};
    void validate() const;
};

// Binary cross entropy, mean over all elements. Predictions are clamped to
// [1e-7, 1 - 1e-7] for log-safety; differentiable w.r.t. p.
Tensor bce_loss(Ctx& ctx, const Tensor& p, const Tensor& y);

// 1 - mean_j of y*p / (y + p - y*p + eps_d), with eps_d = 1e-7 defining the
// y = p = 0 case as a zero-overlap term.
Tensor iou_loss(Ctx& ctx, const Tensor& p, const Tensor& y);

// Nearest-neighbor downsample of a binary mask (half-pixel centers); keeps
// labels binary. Not differentiable.
Tensor nearest_downsample(const Tensor& mask, int out_h, int out_w);

// sum_i alpha_i * (bce(s_i, y_i) + iou(s_i, y_i)) with y_i the ground truth
// downsampled to each stage's resolution. gt is the full-resolution binary
// mask and must match the final stage prediction.
Tensor total_loss(Ctx& ctx, const std::array<Tensor, 4>& stage_preds, const Tensor& gt,
                  const LossWeights& weights);

}  // namespace scanet
