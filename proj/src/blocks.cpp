#include "scanet/blocks.hpp"

#include <cmath>
#include <stdexcept>

namespace scanet {

namespace {

Tensor init_conv_weight(int out_c, int in_c_per_group, int k, Rng& rng) {
    Tensor w({out_c, in_c_per_group, k, k});
    const float bound = 1.0f / std::sqrt(static_cast<float>(in_c_per_group) * k * k);
    for (float& v : w.values()) v = rng.uniform(-bound, bound);
    return w;
}

Tensor apply_act(Ctx& ctx, const Tensor& x, Activation act) {
    switch (act) {
        case Activation::relu: return ops::relu(ctx, x);
        case Activation::relu6: return ops::relu6(ctx, x);
        default: return x;
    }
}

}  // namespace

void BlockSpec::validate() const {
    if (in_channels < 1 || out_channels < 1 || stride < 1 || kernel_size < 1 ||
        expansion_ratio < 1) {
        throw std::invalid_argument("BlockSpec: all fields must be positive, expansion >= 1");
    }
}

ConvBNAct ConvBNAct::create(ParamStore& store, const std::string& prefix, int in_c, int out_c,
                            int k, int stride, int groups, Activation act, Rng& rng) {
    ConvBNAct b;
    b.stride = stride;
    b.padding = k / 2;
    b.groups = groups;
    b.act = act;
    b.weight = store.add_param(prefix + ".conv.weight",
                               init_conv_weight(out_c, in_c / groups, k, rng));
    b.gamma = store.add_param(prefix + ".bn.gamma", Tensor::full({1, out_c, 1, 1}, 1.0f));
    b.beta = store.add_param(prefix + ".bn.beta", Tensor::zeros({1, out_c, 1, 1}));
    b.running_mean = store.add_buffer(prefix + ".bn.running_mean", Tensor::zeros({1, out_c, 1, 1}));
    b.running_var = store.add_buffer(prefix + ".bn.running_var", Tensor::full({1, out_c, 1, 1}, 1.0f));
    return b;
}

Tensor ConvBNAct::forward(Ctx& ctx, const Tensor& x, bool training) const {
    if (x.c() != weight.c() * groups) {
        throw std::invalid_argument("ConvBNAct: input channels " + std::to_string(x.c()) +
                                    " do not match weight " + to_string(weight.shape()) +
                                    " with groups " + std::to_string(groups));
    }
    Tensor y = ops::conv2d(ctx, x, weight, Tensor{}, stride, padding, groups);
    Tensor rm = running_mean, rv = running_var;
    y = ops::batch_norm(ctx, y, gamma, beta, rm, rv, training);
    return apply_act(ctx, y, act);
}

ConvBias ConvBias::create(ParamStore& store, const std::string& prefix, int in_c, int out_c,
                          int k, int stride, int padding, Rng& rng) {
    ConvBias b;
    b.stride = stride;
    b.padding = padding;
    b.weight = store.add_param(prefix + ".weight", init_conv_weight(out_c, in_c, k, rng));
    b.bias = store.add_param(prefix + ".bias", Tensor::zeros({1, out_c, 1, 1}));
    return b;
}

Tensor ConvBias::forward(Ctx& ctx, const Tensor& x) const {
    return ops::conv2d(ctx, x, weight, bias, stride, padding, 1);
}

InvertedResidual InvertedResidual::create(ParamStore& store, const std::string& prefix,
                                          BlockSpec spec, Rng& rng) {
    spec.validate();
    InvertedResidual b;
    b.spec = spec;
    const int hidden = spec.in_channels * spec.expansion_ratio;
    b.has_expand = spec.expansion_ratio > 1;
    int dw_in = spec.in_channels;
    if (b.has_expand) {
        b.expand = ConvBNAct::create(store, prefix + ".expand", spec.in_channels, hidden, 1, 1, 1,
                                     Activation::relu6, rng);
        dw_in = hidden;
    }
    b.depthwise = ConvBNAct::create(store, prefix + ".depthwise", dw_in, dw_in, spec.kernel_size,
                                    spec.stride, dw_in, Activation::relu6, rng);
    b.project = ConvBNAct::create(store, prefix + ".project", dw_in, spec.out_channels, 1, 1, 1,
                                  Activation::none, rng);
    return b;
}

Tensor InvertedResidual::branch(Ctx& ctx, const Tensor& x, bool training) const {
    if (x.c() != spec.in_channels) {
        throw std::invalid_argument("InvertedResidual: expected " +
                                    std::to_string(spec.in_channels) + " channels, got " +
                                    to_string(x.shape()));
    }
    Tensor y = x;
    if (has_expand) y = expand.forward(ctx, y, training);
    y = depthwise.forward(ctx, y, training);
    return project.forward(ctx, y, training);
}

Tensor InvertedResidual::forward(Ctx& ctx, const Tensor& x, bool training) const {
    Tensor y = branch(ctx, x, training);
    if (has_shortcut()) y = ops::add(ctx, y, x);
    return y;
}

UpsampleBlock UpsampleBlock::create(ParamStore& store, const std::string& prefix, BlockSpec spec,
                                    Rng& rng) {
    spec.stride = 1;
    UpsampleBlock b;
    b.block = InvertedResidual::create(store, prefix, spec, rng);
    return b;
}

Tensor UpsampleBlock::forward(Ctx& ctx, const Tensor& x, bool training) const {
    return ops::bilinear_upsample(ctx, block.forward(ctx, x, training), 2);
}

Tensor conv_bn_relu(Ctx& ctx, const ConvBNAct& block, const Tensor& input, bool training) {
    return block.forward(ctx, input, training);
}

Tensor inverted_residual(Ctx& ctx, const InvertedResidual& block, const Tensor& input,
                         bool training) {
    return block.forward(ctx, input, training);
}

Tensor upsample_block(Ctx& ctx, const UpsampleBlock& block, const Tensor& input, bool training) {
    return block.forward(ctx, input, training);
}

}  // namespace scanet
