#include "scanet/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace scanet {

double finite_diff_check(const std::vector<Tensor>& leaves,
                         const std::function<Tensor(Ctx&)>& builder, double step,
                         const std::function<double()>& reference) {
    if (step == 0.0) throw std::invalid_argument("finite_diff_check: step must be nonzero");
    if (leaves.empty()) throw std::invalid_argument("finite_diff_check: no leaves given");

    // Analytic pass.
    std::vector<std::vector<float>> analytic;
    {
        for (Tensor leaf : leaves) {
            if (!leaf.requires_grad()) {
                throw std::invalid_argument("finite_diff_check: all leaves must require grad");
            }
            leaf.zero_grad();
        }
        Tape tape;
        Ctx ctx = Ctx::training(tape);
        Tensor out = builder(ctx);
        Tensor loss = out.size() == 1 ? out : ops::sum_all(ctx, out);
        tape.backward(loss);
        for (Tensor leaf : leaves) {
            const float* g = leaf.grad();
            analytic.emplace_back(g, g + leaf.size());
        }
    }

    const auto eval = [&]() -> double {
        if (reference) return reference();
        Ctx ctx;
        double acc = 0.0;
        for (float v : builder(ctx).values()) acc += v;
        return acc;
    };

    double max_rel = 0.0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        Tensor leaf = leaves[li];
        for (size_t i = 0; i < leaf.size(); ++i) {
            const float saved = leaf.data()[i];
            // Perturbations are stored in f32; divide by the realized step.
            const float hi = static_cast<float>(saved + step);
            const float lo = static_cast<float>(saved - step);
            leaf.data()[i] = hi;
            const double up = eval();
            leaf.data()[i] = lo;
            const double dn = eval();
            leaf.data()[i] = saved;
            const double numeric = (up - dn) / (static_cast<double>(hi) - lo);
            const double a = analytic[li][i];
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

}  // namespace scanet
