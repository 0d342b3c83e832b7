#include "scanet/model.hpp"

#include <stdexcept>

namespace scanet {

ScanetConfig ScanetConfig::lite(int input_size) {
    ScanetConfig cfg;
    cfg.variant = "lite";
    cfg.input_size = input_size;
    cfg.tap_widths = {8, 16, 24, 32};
    cfg.decoder_widths = {24, 16, 12, 8};
    cfg.scam_inner = 16;
    cfg.expansion = 2;
    cfg.units_per_stage = 2;
    return cfg;
}

ScanetConfig ScanetConfig::base(int input_size) {
    ScanetConfig cfg;
    cfg.variant = "base";
    cfg.input_size = input_size;
    cfg.tap_widths = {16, 24, 32, 96};
    cfg.decoder_widths = {64, 48, 32, 24};
    cfg.scam_inner = 32;
    cfg.expansion = 6;
    cfg.units_per_stage = 3;
    return cfg;
}

ScanetConfig ScanetConfig::by_name(const std::string& variant, int input_size) {
    if (variant == "lite") return lite(input_size);
    if (variant == "base") return base(input_size);
    throw std::invalid_argument("unknown variant '" + variant + "' (expected lite|base)");
}

void ScanetConfig::validate() const {
    for (int w : tap_widths)
        if (w < 1) throw std::invalid_argument("ScanetConfig: tap widths must be positive");
    for (int w : decoder_widths)
        if (w < 1) throw std::invalid_argument("ScanetConfig: decoder widths must be positive");
    if (input_size < 16 || input_size % 16 != 0) {
        throw std::invalid_argument("ScanetConfig: input resolution " +
                                    std::to_string(input_size) + " not divisible by 16");
    }
    if (scam_inner < 2 || scam_inner % 2 != 0) {
        throw std::invalid_argument("ScanetConfig: scam_inner must be even and >= 2");
    }
    if (expansion < 1 || units_per_stage < 1) {
        throw std::invalid_argument("ScanetConfig: expansion and units_per_stage must be >= 1");
    }
}

Backbone Backbone::create(ParamStore& store, const ScanetConfig& cfg, Rng& rng) {
    Backbone b;
    b.stem = ConvBNAct::create(store, "backbone.stem", 3, cfg.tap_widths[0], 3, 2, 1,
                               Activation::relu6, rng);
    int idx = 0;
    for (int stage = 0; stage < 4; ++stage) {
        const int in_c = stage == 0 ? cfg.tap_widths[0] : cfg.tap_widths[stage - 1];
        const int out_c = cfg.tap_widths[stage];
        for (int u = 0; u < cfg.units_per_stage; ++u) {
            BlockSpec spec;
            spec.in_channels = u == 0 ? in_c : out_c;
            spec.out_channels = out_c;
            // Stage 1 sits at the stem's stride; stages 2..4 halve resolution.
            spec.stride = (stage > 0 && u == 0) ? 2 : 1;
            spec.expansion_ratio = cfg.expansion;
            spec.kernel_size = 3;
            b.units.push_back(InvertedResidual::create(
                store, "backbone.stage" + std::to_string(stage + 1) + ".unit" + std::to_string(u),
                spec, rng));
            ++idx;
        }
        b.stage_end[stage] = idx;
    }
    return b;
}

std::array<Tensor, 4> Backbone::forward(Ctx& ctx, const Tensor& x, bool training) const {
    std::array<Tensor, 4> taps;
    Tensor y = stem.forward(ctx, x, training);
    int stage = 0;
    for (size_t i = 0; i < units.size(); ++i) {
        y = units[i].forward(ctx, y, training);
        if (static_cast<int>(i + 1) == stage_end[stage]) {
            taps[stage] = y;
            ++stage;
        }
    }
    return taps;
}

ScamBlock ScamBlock::create(ParamStore& store, const std::string& prefix, int in_c, int inner,
                            int out_c, int expansion, Rng& rng) {
    ScamBlock s;
    const int half = inner / 2;
    s.conv_main = ConvBias::create(store, prefix + ".conv_main", in_c, half, 1, 1, 0, rng);
    s.conv_fg = ConvBias::create(store, prefix + ".conv_fg", in_c, half, 1, 1, 0, rng);
    s.conv_bg = ConvBias::create(store, prefix + ".conv_bg", in_c, inner, 1, 1, 0, rng);
    BlockSpec spec;
    spec.in_channels = inner;
    spec.out_channels = inner;
    spec.stride = 1;
    spec.expansion_ratio = expansion;
    spec.kernel_size = 3;
    s.invres_f = InvertedResidual::create(store, prefix + ".invres_f", spec, rng);
    s.invres_b = InvertedResidual::create(store, prefix + ".invres_b", spec, rng);
    s.conv_out = ConvBias::create(store, prefix + ".conv_out", inner, out_c, 3, 1, 1, rng);
    s.conv_pred = ConvBias::create(store, prefix + ".conv_pred", out_c, 1, 1, 1, 0, rng);
    return s;
}

std::array<Tensor, 3> ScamBlock::forward(Ctx& ctx, const Tensor& c_prev, const Tensor& s_prev,
                                         bool training, ScamTrace* trace) const {
    if (s_prev.c() != 1) {
        throw std::invalid_argument("scam: previous prediction must be single-channel, got " +
                                    to_string(s_prev.shape()));
    }
    if (s_prev.h() != c_prev.h() || s_prev.w() != c_prev.w() || s_prev.n() != c_prev.n()) {
        throw std::invalid_argument("scam: spatial mismatch between features " +
                                    to_string(c_prev.shape()) + " and prediction " +
                                    to_string(s_prev.shape()));
    }
    // f_i = Cat(Conv(c), Conv(c * s));  m_i = Sigmoid(Conv(c * (1 - s)))
    Tensor fg_in = ops::mul(ctx, c_prev, s_prev);
    Tensor bg_in = ops::mul(ctx, c_prev, ops::one_minus(ctx, s_prev));
    Tensor f = ops::concat_channels(ctx, conv_main.forward(ctx, c_prev),
                                    conv_fg.forward(ctx, fg_in));
    Tensor m = ops::sigmoid(ctx, conv_bg.forward(ctx, bg_in));
    // b_i = f_i * m_i;  o_i = Conv(UpSample(InvRes(b_i) + InvRes(f_i)))
    Tensor b = ops::mul(ctx, f, m);
    Tensor agg = ops::add(ctx, invres_b.forward(ctx, b, training),
                          invres_f.forward(ctx, f, training));
    Tensor o = conv_out.forward(ctx, ops::bilinear_upsample(ctx, agg, 2));
    Tensor s = ops::sigmoid(ctx, conv_pred.forward(ctx, o));
    if (trace) *trace = ScamTrace{fg_in, bg_in, f, m, b};
    return {o, s, m};
}

std::array<Tensor, 2> stage1_decoder(Ctx& ctx, const UpsampleBlock& up, const ConvBias& pred,
                                     const Tensor& t4, bool training) {
    Tensor o1 = up.forward(ctx, t4, training);
    Tensor s1 = ops::sigmoid(ctx, pred.forward(ctx, o1));
    return {o1, s1};
}

Scanet::Scanet(const ScanetConfig& cfg, uint32_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    backbone_ = Backbone::create(params_, cfg_, rng);

    BlockSpec d1;
    d1.in_channels = cfg_.tap_widths[3];
    d1.out_channels = cfg_.decoder_widths[0];
    d1.stride = 1;
    d1.expansion_ratio = cfg_.expansion;
    d1.kernel_size = 3;
    stage1_up_ = UpsampleBlock::create(params_, "decoder1.up", d1, rng);
    stage1_pred_ = ConvBias::create(params_, "decoder1.pred", cfg_.decoder_widths[0], 1, 1, 1, 0,
                                    rng);

    // SCAM stage i (2..4) consumes Cat(t_{5-i}, o_{i-1}).
    for (int i = 0; i < 3; ++i) {
        const int shortcut_c = cfg_.tap_widths[2 - i];
        const int in_c = shortcut_c + cfg_.decoder_widths[i];
        scam_[i] = ScamBlock::create(params_, "scam" + std::to_string(i + 2), in_c,
                                     cfg_.scam_inner, cfg_.decoder_widths[i + 1], cfg_.expansion,
                                     rng);
    }
}

StageOutputs Scanet::forward(Ctx& ctx, const Tensor& image, bool training,
                             std::array<ScamTrace, 3>* traces) const {
    if (image.c() != 3) {
        throw std::invalid_argument("scanet: expected 3-channel input, got " +
                                    to_string(image.shape()));
    }
    if (image.h() != image.w() || image.h() % 16 != 0) {
        throw std::invalid_argument("scanet: input must be square with side divisible by 16, got " +
                                    to_string(image.shape()));
    }
    StageOutputs out;
    const std::array<Tensor, 4> taps = backbone_.forward(ctx, image, training);
    const auto d1 = stage1_decoder(ctx, stage1_up_, stage1_pred_, taps[3], training);
    out.o[0] = d1[0];
    out.s[0] = d1[1];
    for (int i = 0; i < 3; ++i) {
        Tensor c = ops::concat_channels(ctx, taps[2 - i], out.o[i]);
        const auto r = scam_[i].forward(ctx, c, out.s[i], training,
                                        traces ? &(*traces)[i] : nullptr);
        out.o[i + 1] = r[0];
        out.s[i + 1] = r[1];
        out.m[i] = r[2];
    }
    return out;
}

}  // namespace scanet
