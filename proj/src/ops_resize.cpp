#include <cmath>
#include <stdexcept>
#include <vector>

#include "scanet/ops.hpp"

namespace scanet::ops {

namespace {

struct Axis {
    std::vector<int> i0, i1;
    std::vector<float> w1;  // weight of i1; weight of i0 is 1 - w1
};

// Half-pixel-center source coordinates (align-corners off), clamped to the
// input range.
Axis make_axis(int out_len, int in_len, int factor) {
    Axis ax;
    ax.i0.resize(out_len);
    ax.i1.resize(out_len);
    ax.w1.resize(out_len);
    for (int o = 0; o < out_len; ++o) {
        double src = (o + 0.5) / factor - 0.5;
        if (src < 0.0) src = 0.0;
        if (src > in_len - 1) src = in_len - 1;
        const int lo = static_cast<int>(std::floor(src));
        ax.i0[o] = lo;
        ax.i1[o] = lo + 1 < in_len ? lo + 1 : in_len - 1;
        ax.w1[o] = static_cast<float>(src - lo);
    }
    return ax;
}

}  // namespace

Tensor bilinear_upsample(Ctx& ctx, const Tensor& input, int factor) {
    if (factor < 1) {
        throw std::invalid_argument("bilinear_upsample: factor must be >= 1, got " +
                                    std::to_string(factor));
    }
    if (input.h() < 1 || input.w() < 1) {
        throw std::invalid_argument("bilinear_upsample: empty input " + to_string(input.shape()));
    }
    const int oh = input.h() * factor, ow = input.w() * factor;
    const Axis ay = make_axis(oh, input.h(), factor);
    const Axis axx = make_axis(ow, input.w(), factor);

    Tensor out({input.n(), input.c(), oh, ow});
    const long long planes = static_cast<long long>(input.n()) * input.c();
    const long long in_area = static_cast<long long>(input.h()) * input.w();
    const long long out_area = static_cast<long long>(oh) * ow;
    for (long long p = 0; p < planes; ++p) {
        const float* x = input.data() + p * in_area;
        float* y = out.data() + p * out_area;
        for (int oy = 0; oy < oh; ++oy) {
            const float* r0 = x + static_cast<long long>(ay.i0[oy]) * input.w();
            const float* r1 = x + static_cast<long long>(ay.i1[oy]) * input.w();
            const float wy = ay.w1[oy];
            for (int ox = 0; ox < ow; ++ox) {
                const float wx = axx.w1[ox];
                const float top = r0[axx.i0[ox]] * (1.0f - wx) + r0[axx.i1[ox]] * wx;
                const float bot = r1[axx.i0[ox]] * (1.0f - wx) + r1[axx.i1[ox]] * wx;
                y[static_cast<long long>(oy) * ow + ox] = top * (1.0f - wy) + bot * wy;
            }
        }
    }
    ctx.add_flops(11ull * out.size());

    if (ctx.tape && input.requires_grad()) {
        out.set_requires_grad(true);
        Tensor xc = input, oc_t = out;
        ctx.tape->record([xc, oc_t, ay, axx]() mutable {
            const int iw = xc.w(), ow = oc_t.w(), oh = oc_t.h();
            const long long planes = static_cast<long long>(xc.n()) * xc.c();
            const long long in_area = static_cast<long long>(xc.h()) * iw;
            const long long out_area = static_cast<long long>(oh) * ow;
            const float* go = oc_t.grad();
            float* gx = xc.grad();
            for (long long p = 0; p < planes; ++p) {
                const float* g = go + p * out_area;
                float* gp = gx + p * in_area;
                for (int oy = 0; oy < oh; ++oy) {
                    const float wy = ay.w1[oy];
                    float* r0 = gp + static_cast<long long>(ay.i0[oy]) * iw;
                    float* r1 = gp + static_cast<long long>(ay.i1[oy]) * iw;
                    for (int ox = 0; ox < ow; ++ox) {
                        const float wx = axx.w1[ox];
                        const float gv = g[static_cast<long long>(oy) * ow + ox];
                        r0[axx.i0[ox]] += gv * (1.0f - wy) * (1.0f - wx);
                        r0[axx.i1[ox]] += gv * (1.0f - wy) * wx;
                        r1[axx.i0[ox]] += gv * wy * (1.0f - wx);
                        r1[axx.i1[ox]] += gv * wy * wx;
                    }
                }
            }
        }, oc_t);
    }
    ctx.finish(out);
    return out;
}

}  // namespace scanet::ops
