#pragma once

// Double-precision forward references for the parameterized blocks and the
// SCAM decoder, composed from ref_ops. Reads the same parameter tensors as
// the library blocks (training-mode batch norm).

#include <array>

#include "ref_ops.hpp"
#include "scanet/model.hpp"

namespace scanet::ref {

inline Map conv_bn(const Map& x, const ConvBNAct& b) {
    Map y = conv2d(x, widen(b.weight), nullptr, b.stride, b.padding, b.groups);
    y = batch_norm_train(y, widen(b.gamma), widen(b.beta));
    switch (b.act) {
        case Activation::relu: return relu(y);
        case Activation::relu6: return relu6(y);
        default: return y;
    }
}

inline Map conv_bias(const Map& x, const ConvBias& b) {
    const Map bias = widen(b.bias);
    return conv2d(x, widen(b.weight), &bias, b.stride, b.padding, 1);
}

inline Map inv_res(const Map& x, const InvertedResidual& ir) {
    Map y = x;
    if (ir.has_expand) y = conv_bn(y, ir.expand);
    y = conv_bn(y, ir.depthwise);
    y = conv_bn(y, ir.project);
    if (ir.has_shortcut()) y = add(y, x);
    return y;
}

inline Map up_block(const Map& x, const UpsampleBlock& b) { return upsample2(inv_res(x, b.block)); }

inline std::array<Map, 3> scam(const Map& c, const Map& s, const ScamBlock& blk) {
    const Map fg = mul(c, s);
    const Map bg = mul(c, one_minus(s));
    const Map f = concat(conv_bias(c, blk.conv_main), conv_bias(fg, blk.conv_fg));
    const Map m = sigmoid(conv_bias(bg, blk.conv_bg));
    const Map b = mul(f, m);
    const Map agg = add(inv_res(b, blk.invres_b), inv_res(f, blk.invres_f));
    const Map o = conv_bias(upsample2(agg), blk.conv_out);
    const Map sp = sigmoid(conv_bias(o, blk.conv_pred));
    return {o, sp, m};
}

}  // namespace scanet::ref
