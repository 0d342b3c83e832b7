#include <cmath>
#include <stdexcept>
#include <vector>

#include "scanet/ops.hpp"

namespace scanet::ops {

namespace {

void check_channel_param(const Tensor& t, int c, const char* name) {
    if (!(t.n() == 1 && t.c() == c && t.h() == 1 && t.w() == 1)) {
        throw std::invalid_argument(std::string("batch_norm: ") + name + " shape " +
                                    to_string(t.shape()) + " does not match " +
                                    std::to_string(c) + " channels");
    }
}

}  // namespace

Tensor batch_norm(Ctx& ctx, const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool training, float momentum,
                  float eps) {
    const int c = input.c();
    check_channel_param(gamma, c, "gamma");
    check_channel_param(beta, c, "beta");
    check_channel_param(running_mean, c, "running_mean");
    check_channel_param(running_var, c, "running_var");
    if (!(eps > 0.0f)) throw std::invalid_argument("batch_norm: eps must be > 0");

    const long long area = static_cast<long long>(input.h()) * input.w();
    const long long reduce_n = static_cast<long long>(input.n()) * area;
    if (training && reduce_n == 0) {
        throw std::invalid_argument("batch_norm: zero-size batch in training mode, input " +
                                    to_string(input.shape()));
    }

    std::vector<float> mean(c), inv_std(c);
    if (training) {
        // Two-pass biased batch statistics, accumulated in double.
        for (int ic = 0; ic < c; ++ic) {
            double sum = 0.0;
            for (int bn = 0; bn < input.n(); ++bn) {
                const float* plane = input.data() + (static_cast<long long>(bn) * c + ic) * area;
                for (long long i = 0; i < area; ++i) sum += plane[i];
            }
            const double m = sum / static_cast<double>(reduce_n);
            double var = 0.0;
            for (int bn = 0; bn < input.n(); ++bn) {
                const float* plane = input.data() + (static_cast<long long>(bn) * c + ic) * area;
                for (long long i = 0; i < area; ++i) {
                    const double d = plane[i] - m;
                    var += d * d;
                }
            }
            var /= static_cast<double>(reduce_n);
            mean[ic] = static_cast<float>(m);
            inv_std[ic] = static_cast<float>(1.0 / std::sqrt(var + static_cast<double>(eps)));
            running_mean.data()[ic] =
                (1.0f - momentum) * running_mean.data()[ic] + momentum * static_cast<float>(m);
            running_var.data()[ic] =
                (1.0f - momentum) * running_var.data()[ic] + momentum * static_cast<float>(var);
        }
    } else {
        for (int ic = 0; ic < c; ++ic) {
            mean[ic] = running_mean.data()[ic];
            inv_std[ic] = static_cast<float>(
                1.0 / std::sqrt(static_cast<double>(running_var.data()[ic]) + eps));
        }
    }

    Tensor out(input.shape());
    for (int bn = 0; bn < input.n(); ++bn) {
        for (int ic = 0; ic < c; ++ic) {
            const float sc = gamma.data()[ic] * inv_std[ic];
            const float sh = beta.data()[ic] - mean[ic] * sc;
            const float* x = input.data() + (static_cast<long long>(bn) * c + ic) * area;
            float* y = out.data() + (static_cast<long long>(bn) * c + ic) * area;
            for (long long i = 0; i < area; ++i) y[i] = x[i] * sc + sh;
        }
    }
    ctx.add_flops(2ull * input.size());

    const bool track = ctx.tape && (input.requires_grad() || gamma.requires_grad() ||
                                    beta.requires_grad());
    if (track) {
        out.set_requires_grad(true);
        Tensor xc = input, gc = gamma, bc = beta, oc_t = out;
        ctx.tape->record([xc, gc, bc, oc_t, mean, inv_std, training]() mutable {
            const int c = xc.c();
            const long long area = static_cast<long long>(xc.h()) * xc.w();
            const long long reduce_n = static_cast<long long>(xc.n()) * area;
            const float* go = oc_t.grad();
            const float* xp = xc.data();
            float* gx = xc.requires_grad() ? xc.grad() : nullptr;
            float* gg = gc.requires_grad() ? gc.grad() : nullptr;
            float* gb = bc.requires_grad() ? bc.grad() : nullptr;
            for (int ic = 0; ic < c; ++ic) {
                double sum_g = 0.0, sum_gx = 0.0;  // sums of go and go * xhat
                for (int bn = 0; bn < xc.n(); ++bn) {
                    const long long off = (static_cast<long long>(bn) * c + ic) * area;
                    for (long long i = 0; i < area; ++i) {
                        const float xh = (xp[off + i] - mean[ic]) * inv_std[ic];
                        sum_g += go[off + i];
                        sum_gx += go[off + i] * xh;
                    }
                }
                if (gg) gg[ic] += static_cast<float>(sum_gx);
                if (gb) gb[ic] += static_cast<float>(sum_g);
                if (gx) {
                    const float k = gc.data()[ic] * inv_std[ic];
                    if (training) {
                        const float mg = static_cast<float>(sum_g / static_cast<double>(reduce_n));
                        const float mgx = static_cast<float>(sum_gx / static_cast<double>(reduce_n));
                        for (int bn = 0; bn < xc.n(); ++bn) {
                            const long long off = (static_cast<long long>(bn) * c + ic) * area;
                            for (long long i = 0; i < area; ++i) {
                                const float xh = (xp[off + i] - mean[ic]) * inv_std[ic];
                                gx[off + i] += k * (go[off + i] - mg - xh * mgx);
                            }
                        }
                    } else {
                        for (int bn = 0; bn < xc.n(); ++bn) {
                            const long long off = (static_cast<long long>(bn) * c + ic) * area;
                            for (long long i = 0; i < area; ++i) gx[off + i] += k * go[off + i];
                        }
                    }
                }
            }
        }, oc_t);
    }
    ctx.finish(out);
    return out;
}

}  // namespace scanet::ops
