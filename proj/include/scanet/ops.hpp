#pragma once

#include "scanet/tape.hpp"
#include "scanet/tensor.hpp"

namespace scanet::ops {

// 2-D convolution over (n, c, h, w). weight is (out_c, in_c/groups, k, k),
// bias is (1, out_c, 1, 1) or an undefined Tensor for none. Square kernels.
// Summation order per output element is fixed (channel-in-group, then ky,
// then kx, ascending), so results are bit-identical across runs and thread
// counts.
Tensor conv2d(Ctx& ctx, const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride = 1, int padding = 0, int groups = 1);

// Batch normalization per channel. gamma/beta/running_* are (1, c, 1, 1).
// Training mode normalizes by biased batch statistics and updates running
// stats in place: new = (1 - momentum) * old + momentum * batch.
Tensor batch_norm(Ctx& ctx, const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, bool training,
                  float momentum = 0.1f, float eps = 1e-5f);

Tensor relu(Ctx& ctx, const Tensor& input);
Tensor relu6(Ctx& ctx, const Tensor& input);
Tensor sigmoid(Ctx& ctx, const Tensor& input);

// Bilinear up-sampling by an integer factor, half-pixel centers
// (align-corners off). factor = 1 is the identity.
Tensor bilinear_upsample(Ctx& ctx, const Tensor& input, int factor);

// Elementwise ops. Shapes must match, or b may be single-channel with the
// same batch/spatial dims, broadcast across a's channels.
Tensor add(Ctx& ctx, const Tensor& a, const Tensor& b);
Tensor mul(Ctx& ctx, const Tensor& a, const Tensor& b);
Tensor one_minus(Ctx& ctx, const Tensor& a);
Tensor scale(Ctx& ctx, const Tensor& a, float k);

// Channel-wise concatenation, a's channels first.
Tensor concat_channels(Ctx& ctx, const Tensor& a, const Tensor& b);

Tensor global_avg_pool(Ctx& ctx, const Tensor& input);

// Affine map per batch element; input must be spatially 1x1.
// weight is (out, c, 1, 1), bias (1, out, 1, 1).
Tensor fully_connected(Ctx& ctx, const Tensor& input, const Tensor& weight, const Tensor& bias);

// Sum of all elements -> scalar tensor. Accumulates in double, rounds once.
Tensor sum_all(Ctx& ctx, const Tensor& input);

}  // namespace scanet::ops
