#pragma once

#include <string>

#include "scanet/ops.hpp"
#include "scanet/params.hpp"

namespace scanet {

enum class Activation { none, relu, relu6 };

struct BlockSpec {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    int expansion_ratio = 1;
    int kernel_size = 3;

    void validate() const;
};

// Convolution (no bias) + batch norm + optional activation. Padding keeps
// spatial size at stride 1.
struct ConvBNAct {
    Tensor weight, gamma, beta, running_mean, running_var;
    int stride = 1, padding = 0, groups = 1;
    Activation act = Activation::none;

    static ConvBNAct create(ParamStore& store, const std::string& prefix, int in_c, int out_c,
                            int k, int stride, int groups, Activation act, Rng& rng);
    Tensor forward(Ctx& ctx, const Tensor& x, bool training) const;
};

// Bare convolution with bias (no norm), as used inside the SCAM decoder and
// for prediction heads.
struct ConvBias {
    Tensor weight, bias;
    int stride = 1, padding = 0;

    static ConvBias create(ParamStore& store, const std::string& prefix, int in_c, int out_c,
                           int k, int stride, int padding, Rng& rng);
    Tensor forward(Ctx& ctx, const Tensor& x) const;
};

// Expand (1x1 conv-bn-relu6) -> depthwise kxk conv-bn-relu6 -> linear 1x1
// projection conv-bn. Identity shortcut iff stride == 1 and in == out.
// With expansion_ratio == 1 the expand unit is skipped.
struct InvertedResidual {
    BlockSpec spec;
    bool has_expand = false;
    ConvBNAct expand, depthwise, project;

    static InvertedResidual create(ParamStore& store, const std::string& prefix, BlockSpec spec,
                                   Rng& rng);
    Tensor forward(Ctx& ctx, const Tensor& x, bool training) const;
    bool has_shortcut() const {
        return spec.stride == 1 && spec.in_channels == spec.out_channels;
    }
    // Residual branch only (no shortcut), for structural tests.
    Tensor branch(Ctx& ctx, const Tensor& x, bool training) const;
};

// Inverted residual at stride 1 followed by bilinear up-sample x2.
struct UpsampleBlock {
    InvertedResidual block;

    static UpsampleBlock create(ParamStore& store, const std::string& prefix, BlockSpec spec,
                                Rng& rng);
    Tensor forward(Ctx& ctx, const Tensor& x, bool training) const;
};

// Spec-shaped convenience wrappers over the structs above.
Tensor conv_bn_relu(Ctx& ctx, const ConvBNAct& block, const Tensor& input, bool training);
Tensor inverted_residual(Ctx& ctx, const InvertedResidual& block, const Tensor& input,
                         bool training);
Tensor upsample_block(Ctx& ctx, const UpsampleBlock& block, const Tensor& input, bool training);

}  // namespace scanet
