#include "scanet/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace scanet {

namespace {

constexpr float kClamp = 1e-7f;
constexpr double kIouEps = 1e-7;

void check_same_shape(const Tensor& p, const Tensor& y, const char* op) {
    if (!(p.shape() == y.shape())) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch between predictions " +
                                    to_string(p.shape()) + " and targets " + to_string(y.shape()));
    }
}

}  // namespace

void LossWeights::validate() const {
    for (float a : alpha) {
        if (a < 0.0f) throw std::invalid_argument("LossWeights: alpha must be nonnegative");
        if (a > 0.0f) return;
    }
    throw std::invalid_argument("LossWeights: at least one alpha must be > 0");
}

Tensor bce_loss(Ctx& ctx, const Tensor& p, const Tensor& y) {
    check_same_shape(p, y, "bce_loss");
    const size_t n = p.size();
    if (n == 0) throw std::invalid_argument("bce_loss: empty tensors");
    double acc = 0.0;
    const float* pp = p.data();
    const float* yp = y.data();
    for (size_t i = 0; i < n; ++i) {
        double pc = pp[i];
        if (pc < kClamp) pc = kClamp;
        if (pc > 1.0 - kClamp) pc = 1.0 - kClamp;
        acc += yp[i] * std::log(pc) + (1.0 - yp[i]) * std::log(1.0 - pc);
    }
    Tensor out = Tensor::scalar(static_cast<float>(-acc / static_cast<double>(n)));
    ctx.add_flops(6ull * n);
    if (ctx.tape && p.requires_grad()) {
        out.set_requires_grad(true);
        Tensor pc_t = p, yc = y, oc = out;
        ctx.tape->record([pc_t, yc, oc]() mutable {
            const float g = oc.grad()[0];
            const size_t n = pc_t.size();
            const float inv_n = static_cast<float>(1.0 / static_cast<double>(n));
            const float* pp = pc_t.data();
            const float* yp = yc.data();
            float* gp = pc_t.grad();
            for (size_t i = 0; i < n; ++i) {
                // Clamped elements sit on a constant branch.
                if (pp[i] < kClamp || pp[i] > 1.0f - kClamp) continue;
                gp[i] += g * inv_n * (-(yp[i] / pp[i]) + (1.0f - yp[i]) / (1.0f - pp[i]));
            }
        }, oc);
    }
    ctx.finish(out);
    return out;
}

Tensor iou_loss(Ctx& ctx, const Tensor& p, const Tensor& y) {
    check_same_shape(p, y, "iou_loss");
    const size_t n = p.size();
    if (n == 0) throw std::invalid_argument("iou_loss: empty tensors");
    double acc = 0.0;
    const float* pp = p.data();
    const float* yp = y.data();
    for (size_t i = 0; i < n; ++i) {
        const double num = static_cast<double>(yp[i]) * pp[i];
        const double den = yp[i] + pp[i] - num + kIouEps;
        acc += num / den;
    }
    Tensor out = Tensor::scalar(static_cast<float>(1.0 - acc / static_cast<double>(n)));
    ctx.add_flops(6ull * n);
    if (ctx.tape && p.requires_grad()) {
        out.set_requires_grad(true);
        Tensor pc_t = p, yc = y, oc = out;
        ctx.tape->record([pc_t, yc, oc]() mutable {
            const float g = oc.grad()[0];
            const size_t n = pc_t.size();
            const double inv_n = 1.0 / static_cast<double>(n);
            const float* pp = pc_t.data();
            const float* yp = yc.data();
            float* gp = pc_t.grad();
            for (size_t i = 0; i < n; ++i) {
                const double yv = yp[i];
                const double den = yv + pp[i] - yv * pp[i] + kIouEps;
                // d/dp [ y*p / den ] = (y^2 + eps*y) / den^2
                gp[i] += static_cast<float>(-g * inv_n * (yv * yv + kIouEps * yv) / (den * den));
            }
        }, oc);
    }
    ctx.finish(out);
    return out;
}

Tensor nearest_downsample(const Tensor& mask, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1 || mask.h() < 1 || mask.w() < 1) {
        throw std::invalid_argument("nearest_downsample: empty extent");
    }
    Tensor out({mask.n(), mask.c(), out_h, out_w});
    const double sy = static_cast<double>(mask.h()) / out_h;
    const double sx = static_cast<double>(mask.w()) / out_w;
    for (int bn = 0; bn < mask.n(); ++bn)
        for (int ic = 0; ic < mask.c(); ++ic)
            for (int oy = 0; oy < out_h; ++oy) {
                int iy = static_cast<int>((oy + 0.5) * sy);
                if (iy >= mask.h()) iy = mask.h() - 1;
                for (int ox = 0; ox < out_w; ++ox) {
                    int ix = static_cast<int>((ox + 0.5) * sx);
                    if (ix >= mask.w()) ix = mask.w() - 1;
                    out.at(bn, ic, oy, ox) = mask.at(bn, ic, iy, ix);
                }
            }
    return out;
}

Tensor total_loss(Ctx& ctx, const std::array<Tensor, 4>& stage_preds, const Tensor& gt,
                  const LossWeights& weights) {
    weights.validate();
    const Tensor& s4 = stage_preds[3];
    if (gt.h() != s4.h() || gt.w() != s4.w() || gt.n() != s4.n()) {
        throw std::invalid_argument("total_loss: ground truth " + to_string(gt.shape()) +
                                    " does not match final stage prediction " +
                                    to_string(s4.shape()));
    }
    Tensor total;
    for (int i = 0; i < 4; ++i) {
        const Tensor& si = stage_preds[i];
        const Tensor yi = (si.h() == gt.h() && si.w() == gt.w())
                              ? gt
                              : nearest_downsample(gt, si.h(), si.w());
        Tensor term = ops::add(ctx, bce_loss(ctx, si, yi), iou_loss(ctx, si, yi));
        term = ops::scale(ctx, term, weights.alpha[i]);
        total = total.defined() ? ops::add(ctx, total, term) : term;
    }
    return total;
}

}  // namespace scanet
