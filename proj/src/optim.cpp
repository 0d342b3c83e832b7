#include "scanet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace scanet {

void TrainConfig::validate() const {
    if (lr0 <= 0 || beta1 <= 0 || beta2 <= 0 || eps <= 0 || gamma <= 0 || epochs < 1 ||
        batch_size < 1 || eval_every < 1) {
        throw std::invalid_argument("TrainConfig: all fields must be positive, eval_every >= 1");
    }
    if (beta1 >= 1.0f || beta2 >= 1.0f) {
        throw std::invalid_argument("TrainConfig: betas must be in (0, 1)");
    }
    weights.validate();
}

AdamState AdamState::create(const ParamStore& params) {
    AdamState st;
    for (const auto& e : params.entries()) {
        if (!e.learnable) continue;
        st.m.emplace_back(e.tensor.size(), 0.0);
        st.v.emplace_back(e.tensor.size(), 0.0);
    }
    return st;
}

void adam_step(ParamStore& params, AdamState& state, double lr, const TrainConfig& cfg) {
    ++state.t;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    size_t slot = 0;
    for (auto& e : params.entries()) {
        if (!e.learnable) continue;
        if (!e.tensor.has_grad()) {
            throw std::runtime_error("adam_step: missing gradient on learnable tensor '" +
                                     e.name + "'");
        }
        const float* g = e.tensor.grad();
        double* mp = state.m[slot].data();
        double* vp = state.v[slot].data();
        float* w = e.tensor.data();
        for (size_t i = 0; i < e.tensor.size(); ++i) {
            mp[i] = b1 * mp[i] + (1.0 - b1) * g[i];
            vp[i] = b2 * vp[i] + (1.0 - b2) * static_cast<double>(g[i]) * g[i];
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            w[i] = static_cast<float>(w[i] - lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
        ++slot;
    }
}

double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw std::invalid_argument("lr_at: epoch must be >= 0");
    return static_cast<double>(cfg.lr0) * std::pow(static_cast<double>(cfg.gamma), epoch);
}

}  // namespace scanet
