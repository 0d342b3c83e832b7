#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scanet/blocks.hpp"

namespace scanet {

// Architecture description from which the model is assembled.
struct ScanetConfig {
    std::string variant = "lite";
    int input_size = 320;                      // divisible by 16
    std::array<int, 4> tap_widths{8, 16, 24, 32};    // channels at strides 1/2 .. 1/16
    std::array<int, 4> decoder_widths{24, 16, 12, 8};  // o_1 .. o_4 channels
    int scam_inner = 16;                       // even
    int expansion = 2;
    int units_per_stage = 2;

    static ScanetConfig lite(int input_size = 320);
    static ScanetConfig base(int input_size = 320);
    static ScanetConfig by_name(const std::string& variant, int input_size = 320);
    void validate() const;
};

// Four supervised prediction maps plus features and background masks.
// With input HxH: s1 at H/8, s2 at H/4, s3 at H/2, s4 at H.
struct StageOutputs {
    std::array<Tensor, 4> s;  // stage predictions, 1 channel, values in (0,1)
    std::array<Tensor, 4> o;  // stage features
    std::array<Tensor, 3> m;  // background masks of stages 2..4 (m[0] = m_2)
};

// Pre-activation inputs and intermediates of one SCAM forward, for
// structural checks.
struct ScamTrace {
    Tensor fg_conv_input;  // c_prev * s_prev
    Tensor bg_conv_input;  // c_prev * (1 - s_prev)
    Tensor f, m, b;
};

// Segregation and context aggregation decoder stage.
struct ScamBlock {
    ConvBias conv_main, conv_fg, conv_bg;  // 1x1; main+fg each emit inner/2, bg emits inner
    InvertedResidual invres_f, invres_b;
    ConvBias conv_out;   // 3x3 after the x2 up-sample
    ConvBias conv_pred;  // 1x1 -> 1 channel

    static ScamBlock create(ParamStore& store, const std::string& prefix, int in_c, int inner,
                            int out_c, int expansion, Rng& rng);
    // Returns (o_i, s_i, m_i).
    std::array<Tensor, 3> forward(Ctx& ctx, const Tensor& c_prev, const Tensor& s_prev,
                                  bool training, ScamTrace* trace = nullptr) const;
};

// Backbone: conv-bn-relu6 stem at stride 2 followed by inverted-residual
// stages; taps at strides 1/2, 1/4, 1/8, 1/16.
struct Backbone {
    ConvBNAct stem;
    std::vector<InvertedResidual> units;
    std::array<int, 4> stage_end{};  // index one past the last unit of each stage

    static Backbone create(ParamStore& store, const ScanetConfig& cfg, Rng& rng);
    std::array<Tensor, 4> forward(Ctx& ctx, const Tensor& x, bool training) const;
};

class Scanet {
public:
    Scanet(const ScanetConfig& cfg, uint32_t seed);

    StageOutputs forward(Ctx& ctx, const Tensor& image, bool training,
                         std::array<ScamTrace, 3>* traces = nullptr) const;

    const ScanetConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const Backbone& backbone() const { return backbone_; }
    long long param_count() const { return params_.param_count(); }

private:
    ScanetConfig cfg_;
    ParamStore params_;
    Backbone backbone_;
    UpsampleBlock stage1_up_;
    ConvBias stage1_pred_;
    std::array<ScamBlock, 3> scam_;
};

// Stage-1 decoder on the deepest tap: up-sample block to d1 channels plus a
// 1x1 sigmoid head.
std::array<Tensor, 2> stage1_decoder(Ctx& ctx, const UpsampleBlock& up, const ConvBias& pred,
                                     const Tensor& t4, bool training);

}  // namespace scanet
