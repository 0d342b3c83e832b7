#include <stdexcept>

#include "scanet/ops.hpp"
#include "scanet/threading.hpp"

namespace scanet::ops {

namespace {

void check_bias(const Tensor& bias, int out_c, const char* op) {
    if (!bias.defined()) return;
    if (!(bias.n() == 1 && bias.c() == out_c && bias.h() == 1 && bias.w() == 1)) {
        throw std::invalid_argument(std::string(op) + ": bias shape " + to_string(bias.shape()) +
                                    " does not match " + std::to_string(out_c) +
                                    " output channels");
    }
}

}  // namespace

Tensor conv2d(Ctx& ctx, const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding, int groups) {
    const int in_c = input.c();
    const int out_c = weight.n();
    const int k = weight.h();
    if (groups < 1 || stride < 1 || padding < 0 || k < 1) {
        throw std::invalid_argument("conv2d: invalid hyperparameters (stride " +
                                    std::to_string(stride) + ", padding " +
                                    std::to_string(padding) + ", groups " +
                                    std::to_string(groups) + ", k " + std::to_string(k) + ")");
    }
    if (weight.w() != k) {
        throw std::invalid_argument("conv2d: kernel must be square, got " +
                                    to_string(weight.shape()));
    }
    if (in_c % groups != 0 || out_c % groups != 0) {
        throw std::invalid_argument("conv2d: channels not divisible by groups: input " +
                                    to_string(input.shape()) + ", weight " +
                                    to_string(weight.shape()) + ", groups " +
                                    std::to_string(groups));
    }
    const int icg = in_c / groups;
    if (weight.c() != icg) {
        throw std::invalid_argument("conv2d: weight shape " + to_string(weight.shape()) +
                                    " incompatible with input " + to_string(input.shape()) +
                                    " at groups " + std::to_string(groups));
    }
    check_bias(bias, out_c, "conv2d");

    const int h = input.h(), w = input.w();
    const int oh = (h + 2 * padding - k) / stride + 1;
    const int ow = (w + 2 * padding - k) / stride + 1;
    if (h + 2 * padding < k || w + 2 * padding < k) {
        throw std::invalid_argument("conv2d: kernel " + std::to_string(k) +
                                    " larger than padded input " + to_string(input.shape()) +
                                    " (padding " + std::to_string(padding) + ")");
    }

    Tensor out({input.n(), out_c, oh, ow});
    const float* xp = input.data();
    const float* wp = weight.data();
    const float* bp = bias.defined() ? bias.data() : nullptr;
    float* op = out.data();
    const int ocg = out_c / groups;

    // One task per (batch, out-channel) plane. The accumulation order per
    // output element (ic-in-group, ky, kx ascending) never depends on the
    // split.
    parallel_for(static_cast<long long>(input.n()) * out_c, [&](long long lo, long long hi) {
        for (long long t = lo; t < hi; ++t) {
            const int bn = static_cast<int>(t / out_c);
            const int oc = static_cast<int>(t % out_c);
            const int ic0 = (oc / ocg) * icg;
            const float* wbase = wp + static_cast<long long>(oc) * icg * k * k;
            float* oplane = op + (static_cast<long long>(bn) * out_c + oc) * oh * ow;
            const float b = bp ? bp[oc] : 0.0f;
            for (int oy = 0; oy < oh; ++oy) {
                const int iy0 = oy * stride - padding;
                for (int ox = 0; ox < ow; ++ox) {
                    const int ix0 = ox * stride - padding;
                    float acc = 0.0f;
                    for (int ic = 0; ic < icg; ++ic) {
                        const float* xplane =
                            xp + (static_cast<long long>(bn) * in_c + ic0 + ic) * h * w;
                        const float* wk = wbase + static_cast<long long>(ic) * k * k;
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = iy0 + ky;
                            if (iy < 0 || iy >= h) continue;
                            const float* xrow = xplane + static_cast<long long>(iy) * w;
                            const float* wrow = wk + ky * k;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ix0 + kx;
                                if (ix < 0 || ix >= w) continue;
                                acc += xrow[ix] * wrow[kx];
                            }
                        }
                    }
                    oplane[oy * ow + ox] = acc + b;
                }
            }
        }
    });

    ctx.add_flops(2ull * out.size() * icg * k * k);

    const bool track = ctx.tape && (input.requires_grad() || weight.requires_grad() ||
                                    (bias.defined() && bias.requires_grad()));
    if (track) {
        out.set_requires_grad(true);
        Tensor xc = input, wc = weight, bc = bias, oc_t = out;
        ctx.tape->record([xc, wc, bc, oc_t, stride, padding, groups]() mutable {
            const int in_c = xc.c(), out_c = wc.n(), k = wc.h();
            const int icg = in_c / groups, ocg = out_c / groups;
            const int h = xc.h(), w = xc.w(), oh = oc_t.h(), ow = oc_t.w();
            const float* go = oc_t.grad();
            const float* xp = xc.data();
            const float* wp = wc.data();
            float* gx = xc.requires_grad() ? xc.grad() : nullptr;
            float* gw = wc.requires_grad() ? wc.grad() : nullptr;
            float* gb = (bc.defined() && bc.requires_grad()) ? bc.grad() : nullptr;
            for (int bn = 0; bn < xc.n(); ++bn) {
                for (int oc = 0; oc < out_c; ++oc) {
                    const int ic0 = (oc / ocg) * icg;
                    const float* wbase = wp + static_cast<long long>(oc) * icg * k * k;
                    float* gwbase = gw ? gw + static_cast<long long>(oc) * icg * k * k : nullptr;
                    const float* gplane = go + (static_cast<long long>(bn) * out_c + oc) * oh * ow;
                    for (int oy = 0; oy < oh; ++oy) {
                        const int iy0 = oy * stride - padding;
                        for (int ox = 0; ox < ow; ++ox) {
                            const float g = gplane[oy * ow + ox];
                            if (g == 0.0f) continue;
                            const int ix0 = ox * stride - padding;
                            if (gb) gb[oc] += g;
                            for (int ic = 0; ic < icg; ++ic) {
                                const long long xoff =
                                    (static_cast<long long>(bn) * in_c + ic0 + ic) * h * w;
                                for (int ky = 0; ky < k; ++ky) {
                                    const int iy = iy0 + ky;
                                    if (iy < 0 || iy >= h) continue;
                                    for (int kx = 0; kx < k; ++kx) {
                                        const int ix = ix0 + kx;
                                        if (ix < 0 || ix >= w) continue;
                                        const long long xi = xoff + static_cast<long long>(iy) * w + ix;
                                        const long long wi = static_cast<long long>(ic) * k * k + ky * k + kx;
                                        if (gx) gx[xi] += wbase[wi] * g;
                                        if (gw) gwbase[wi] += xp[xi] * g;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }, oc_t);
    }
    ctx.finish(out);
    return out;
}

Tensor global_avg_pool(Ctx& ctx, const Tensor& input) {
    const long long area = static_cast<long long>(input.h()) * input.w();
    if (area == 0) {
        throw std::invalid_argument("global_avg_pool: empty spatial extent " +
                                    to_string(input.shape()));
    }
    Tensor out({input.n(), input.c(), 1, 1});
    const float* xp = input.data();
    float* op = out.data();
    for (int bn = 0; bn < input.n(); ++bn) {
        for (int ic = 0; ic < input.c(); ++ic) {
            const float* plane = xp + (static_cast<long long>(bn) * input.c() + ic) * area;
            double acc = 0.0;
            for (long long i = 0; i < area; ++i) acc += plane[i];
            op[bn * input.c() + ic] = static_cast<float>(acc / static_cast<double>(area));
        }
    }
    ctx.add_flops(input.size());
    if (ctx.tape && input.requires_grad()) {
        out.set_requires_grad(true);
        Tensor xc = input, oc_t = out;
        ctx.tape->record([xc, oc_t]() mutable {
            const long long area = static_cast<long long>(xc.h()) * xc.w();
            const float inv = static_cast<float>(1.0 / static_cast<double>(area));
            const float* go = oc_t.grad();
            float* gx = xc.grad();
            for (int bn = 0; bn < xc.n(); ++bn)
                for (int ic = 0; ic < xc.c(); ++ic) {
                    const float g = go[bn * xc.c() + ic] * inv;
                    float* plane = gx + (static_cast<long long>(bn) * xc.c() + ic) * area;
                    for (long long i = 0; i < area; ++i) plane[i] += g;
                }
        }, oc_t);
    }
    ctx.finish(out);
    return out;
}

Tensor fully_connected(Ctx& ctx, const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.h() != 1 || input.w() != 1) {
        throw std::invalid_argument("fully_connected: input must be spatially 1x1, got " +
                                    to_string(input.shape()));
    }
    const int in_c = input.c();
    const int out_c = weight.n();
    if (weight.c() != in_c || weight.h() != 1 || weight.w() != 1) {
        throw std::invalid_argument("fully_connected: weight " + to_string(weight.shape()) +
                                    " incompatible with input " + to_string(input.shape()));
    }
    check_bias(bias, out_c, "fully_connected");

    Tensor out({input.n(), out_c, 1, 1});
    const float* xp = input.data();
    const float* wp = weight.data();
    const float* bp = bias.defined() ? bias.data() : nullptr;
    float* op = out.data();
    for (int bn = 0; bn < input.n(); ++bn) {
        for (int oc = 0; oc < out_c; ++oc) {
            float acc = 0.0f;
            const float* wrow = wp + static_cast<long long>(oc) * in_c;
            const float* xrow = xp + static_cast<long long>(bn) * in_c;
            for (int ic = 0; ic < in_c; ++ic) acc += xrow[ic] * wrow[ic];
            op[bn * out_c + oc] = acc + (bp ? bp[oc] : 0.0f);
        }
    }
    ctx.add_flops(2ull * input.n() * out_c * in_c);
    const bool track = ctx.tape && (input.requires_grad() || weight.requires_grad() ||
                                    (bias.defined() && bias.requires_grad()));
    if (track) {
        out.set_requires_grad(true);
        Tensor xc = input, wc = weight, bc = bias, oc_t = out;
        ctx.tape->record([xc, wc, bc, oc_t]() mutable {
            const int in_c = xc.c(), out_c = wc.n();
            const float* go = oc_t.grad();
            const float* xp = xc.data();
            const float* wp = wc.data();
            float* gx = xc.requires_grad() ? xc.grad() : nullptr;
            float* gw = wc.requires_grad() ? wc.grad() : nullptr;
            float* gb = (bc.defined() && bc.requires_grad()) ? bc.grad() : nullptr;
            for (int bn = 0; bn < xc.n(); ++bn) {
                for (int oc = 0; oc < out_c; ++oc) {
                    const float g = go[bn * out_c + oc];
                    if (g == 0.0f) continue;
                    if (gb) gb[oc] += g;
                    for (int ic = 0; ic < in_c; ++ic) {
                        if (gx) gx[bn * in_c + ic] += wp[oc * in_c + ic] * g;
                        if (gw) gw[oc * in_c + ic] += xp[bn * in_c + ic] * g;
                    }
                }
            }
        }, oc_t);
    }
    ctx.finish(out);
    return out;
}

}  // namespace scanet::ops
