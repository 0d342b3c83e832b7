#include <cmath>
#include <limits>
#include <stdexcept>

#include "scanet/ops.hpp"

namespace scanet::ops {

namespace {

bool wants_grad(const Ctx& ctx, std::initializer_list<const Tensor*> inputs) {
    if (!ctx.tape) return false;
    for (const Tensor* t : inputs) {
        if (t->defined() && t->requires_grad()) return true;
    }
    return false;
}

enum class EwMode { same, broadcast_b };  // broadcast_b: b is (n, 1, h, w)

EwMode ew_mode(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return EwMode::same;
    if (b.c() == 1 && b.n() == a.n() && b.h() == a.h() && b.w() == a.w()) {
        return EwMode::broadcast_b;
    }
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + to_string(a.shape()) +
                                " and " + to_string(b.shape()));
}

template <typename Fwd, typename Bwd>
Tensor unary_op(Ctx& ctx, const Tensor& x, Fwd fwd, Bwd bwd_factor) {
    Tensor out(x.shape());
    const float* xp = x.data();
    float* op = out.data();
    const size_t n = x.size();
    for (size_t i = 0; i < n; ++i) op[i] = fwd(xp[i]);
    ctx.add_flops(n);
    if (wants_grad(ctx, {&x})) {
        out.set_requires_grad(true);
        Tensor xc = x, oc = out;
        ctx.tape->record([xc, oc, bwd_factor]() mutable {
            if (!xc.requires_grad()) return;
            const float* go = oc.grad();
            const float* xp = xc.data();
            const float* yp = oc.data();
            float* gx = xc.grad();
            for (size_t i = 0; i < xc.size(); ++i) gx[i] += go[i] * bwd_factor(xp[i], yp[i]);
        }, oc);
    }
    ctx.finish(out);
    return out;
}

}  // namespace

Tensor relu(Ctx& ctx, const Tensor& input) {
    return unary_op(
        ctx, input, [](float v) { return v > 0.0f ? v : 0.0f; },
        [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Tensor relu6(Ctx& ctx, const Tensor& input) {
    return unary_op(
        ctx, input, [](float v) { return v < 0.0f ? 0.0f : (v > 6.0f ? 6.0f : v); },
        [](float x, float) { return (x > 0.0f && x < 6.0f) ? 1.0f : 0.0f; });
}

Tensor sigmoid(Ctx& ctx, const Tensor& input) {
    // Computed in double, then pinned inside the open interval (0, 1) so the
    // range invariant holds even where exp() saturates in float.
    constexpr float lo = std::numeric_limits<float>::min();
    constexpr float hi = 1.0f - std::numeric_limits<float>::epsilon() / 2.0f;
    Tensor out = unary_op(
        ctx, input,
        [](float v) {
            float s = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
            if (s < lo) s = lo;
            if (s > hi) s = hi;
            return s;
        },
        [](float, float y) { return y * (1.0f - y); });
    ctx.add_flops(3 * out.size());  // on top of unary_op's 1/elem: exp, add, div
    return out;
}

Tensor add(Ctx& ctx, const Tensor& a, const Tensor& b) {
    const EwMode mode = ew_mode(a, b, "add");
    Tensor out(a.shape());
    const float* ap = a.data();
    const float* bp = b.data();
    float* op = out.data();
    const long long plane = static_cast<long long>(a.h()) * a.w();
    if (mode == EwMode::same) {
        for (size_t i = 0; i < a.size(); ++i) op[i] = ap[i] + bp[i];
    } else {
        for (int in = 0; in < a.n(); ++in)
            for (int ic = 0; ic < a.c(); ++ic) {
                const float* brow = bp + in * plane;
                const float* arow = ap + (static_cast<long long>(in) * a.c() + ic) * plane;
                float* orow = op + (static_cast<long long>(in) * a.c() + ic) * plane;
                for (long long i = 0; i < plane; ++i) orow[i] = arow[i] + brow[i];
            }
    }
    ctx.add_flops(a.size());
    if (wants_grad(ctx, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        ctx.tape->record([ac, bc, oc, mode]() mutable {
            const float* go = oc.grad();
            const long long plane = static_cast<long long>(ac.h()) * ac.w();
            if (ac.requires_grad()) {
                float* ga = ac.grad();
                for (size_t i = 0; i < ac.size(); ++i) ga[i] += go[i];
            }
            if (bc.requires_grad()) {
                float* gb = bc.grad();
                if (mode == EwMode::same) {
                    for (size_t i = 0; i < bc.size(); ++i) gb[i] += go[i];
                } else {
                    for (int in = 0; in < ac.n(); ++in)
                        for (int ic = 0; ic < ac.c(); ++ic) {
                            const float* grow =
                                go + (static_cast<long long>(in) * ac.c() + ic) * plane;
                            float* brow = gb + in * plane;
                            for (long long i = 0; i < plane; ++i) brow[i] += grow[i];
                        }
                }
            }
        }, oc);
    }
    ctx.finish(out);
    return out;
}

Tensor mul(Ctx& ctx, const Tensor& a, const Tensor& b) {
    const EwMode mode = ew_mode(a, b, "mul");
    Tensor out(a.shape());
    const float* ap = a.data();
    const float* bp = b.data();
    float* op = out.data();
    const long long plane = static_cast<long long>(a.h()) * a.w();
    if (mode == EwMode::same) {
        for (size_t i = 0; i < a.size(); ++i) op[i] = ap[i] * bp[i];
    } else {
        for (int in = 0; in < a.n(); ++in)
            for (int ic = 0; ic < a.c(); ++ic) {
                const float* brow = bp + in * plane;
                const float* arow = ap + (static_cast<long long>(in) * a.c() + ic) * plane;
                float* orow = op + (static_cast<long long>(in) * a.c() + ic) * plane;
                for (long long i = 0; i < plane; ++i) orow[i] = arow[i] * brow[i];
            }
    }
    ctx.add_flops(a.size());
    if (wants_grad(ctx, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        ctx.tape->record([ac, bc, oc, mode]() mutable {
            const float* go = oc.grad();
            const float* ap = ac.data();
            const float* bp = bc.data();
            const long long plane = static_cast<long long>(ac.h()) * ac.w();
            if (ac.requires_grad()) {
                float* ga = ac.grad();
                if (mode == EwMode::same) {
                    for (size_t i = 0; i < ac.size(); ++i) ga[i] += go[i] * bp[i];
                } else {
                    for (int in = 0; in < ac.n(); ++in)
                        for (int ic = 0; ic < ac.c(); ++ic) {
                            const long long off = (static_cast<long long>(in) * ac.c() + ic) * plane;
                            const float* brow = bp + in * plane;
                            for (long long i = 0; i < plane; ++i) ga[off + i] += go[off + i] * brow[i];
                        }
                }
            }
            if (bc.requires_grad()) {
                float* gb = bc.grad();
                if (mode == EwMode::same) {
                    for (size_t i = 0; i < bc.size(); ++i) gb[i] += go[i] * ap[i];
                } else {
                    for (int in = 0; in < ac.n(); ++in)
                        for (int ic = 0; ic < ac.c(); ++ic) {
                            const long long off = (static_cast<long long>(in) * ac.c() + ic) * plane;
                            float* brow = gb + in * plane;
                            for (long long i = 0; i < plane; ++i) brow[i] += go[off + i] * ap[off + i];
                        }
                }
            }
        }, oc);
    }
    ctx.finish(out);
    return out;
}

Tensor one_minus(Ctx& ctx, const Tensor& a) {
    return unary_op(
        ctx, a, [](float v) { return 1.0f - v; }, [](float, float) { return -1.0f; });
}

Tensor scale(Ctx& ctx, const Tensor& a, float k) {
    return unary_op(
        ctx, a, [k](float v) { return k * v; }, [k](float, float) { return k; });
}

Tensor concat_channels(Ctx& ctx, const Tensor& a, const Tensor& b) {
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
        throw std::invalid_argument("concat_channels: batch/spatial mismatch between " +
                                    to_string(a.shape()) + " and " + to_string(b.shape()));
    }
    Tensor out({a.n(), a.c() + b.c(), a.h(), a.w()});
    const long long plane = static_cast<long long>(a.h()) * a.w();
    float* op = out.data();
    for (int in = 0; in < a.n(); ++in) {
        const float* ap = a.data() + static_cast<long long>(in) * a.c() * plane;
        const float* bp = b.data() + static_cast<long long>(in) * b.c() * plane;
        float* dst = op + static_cast<long long>(in) * out.c() * plane;
        std::copy(ap, ap + a.c() * plane, dst);
        std::copy(bp, bp + b.c() * plane, dst + a.c() * plane);
    }
    if (wants_grad(ctx, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor ac = a, bc = b, oc = out;
        ctx.tape->record([ac, bc, oc]() mutable {
            const float* go = oc.grad();
            const long long plane = static_cast<long long>(ac.h()) * ac.w();
            const int cout = oc.c();
            for (int in = 0; in < ac.n(); ++in) {
                const float* gsrc = go + static_cast<long long>(in) * cout * plane;
                if (ac.requires_grad()) {
                    float* ga = ac.grad() + static_cast<long long>(in) * ac.c() * plane;
                    for (long long i = 0; i < ac.c() * plane; ++i) ga[i] += gsrc[i];
                }
                if (bc.requires_grad()) {
                    float* gb = bc.grad() + static_cast<long long>(in) * bc.c() * plane;
                    const float* gsb = gsrc + ac.c() * plane;
                    for (long long i = 0; i < bc.c() * plane; ++i) gb[i] += gsb[i];
                }
            }
        }, oc);
    }
    ctx.finish(out);
    return out;
}

Tensor sum_all(Ctx& ctx, const Tensor& input) {
    double acc = 0.0;
    for (float v : input.values()) acc += v;
    Tensor out = Tensor::scalar(static_cast<float>(acc));
    ctx.add_flops(input.size());
    if (wants_grad(ctx, {&input})) {
        out.set_requires_grad(true);
        Tensor xc = input, oc = out;
        ctx.tape->record([xc, oc]() mutable {
            if (!xc.requires_grad()) return;
            const float g = oc.grad()[0];
            float* gx = xc.grad();
            for (size_t i = 0; i < xc.size(); ++i) gx[i] += g;
        }, oc);
    }
    ctx.finish(out);
    return out;
}

}  // namespace scanet::ops
