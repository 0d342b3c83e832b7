#pragma once

#include <cstdint>
#include <vector>

#include "scanet/losses.hpp"
#include "scanet/params.hpp"

namespace scanet {

struct TrainConfig {
    float lr0 = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float gamma = 0.95f;  // exponential decay per epoch
    int epochs = 100;
    int batch_size = 16;
    int eval_every = 5;
    LossWeights weights;
    uint64_t seed = 0;
    bool augment = true;

    void validate() const;
};

// Per-parameter Adam moments, aligned with the store's learnable entries in
// iteration order. m and v start at zero; t counts completed steps. Moments
// are kept in double so the scalar trajectory tracks the textbook recurrence
// far below float resolution; checkpoints narrow them to f32.
struct AdamState {
    std::vector<std::vector<double>> m, v;
    long long t = 0;

    static AdamState create(const ParamStore& params);
};

// Bias-corrected Adam update from accumulated gradients. Gradients are left
// untouched; the caller zeroes them after the step.
void adam_step(ParamStore& params, AdamState& state, double lr, const TrainConfig& cfg);

// lr0 * gamma^epoch (epoch is 0-based).
double lr_at(int epoch, const TrainConfig& cfg);

}  // namespace scanet
