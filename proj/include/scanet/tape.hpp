#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "scanet/tensor.hpp"

namespace scanet {

// Records backward rules during a forward pass. Replaying in reverse
// recording order visits each node exactly once. A tape is confined to one
// thread; drop or clear() it to release the captured graph.
class Tape {
public:
    void record(std::function<void()> backward_fn, Tensor output) {
        nodes_.push_back({std::move(backward_fn), std::move(output)});
    }

    // Zeros the recorded outputs' gradients, seeds d(loss)/d(loss) = 1 and
    // replays all nodes in reverse order. loss must be a scalar (1x1x1x1)
    // produced while this tape was active. Leaf gradients are never cleared
    // here, so repeated backward calls accumulate into them.
    void backward(Tensor loss);

    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::function<void()> fn;
        Tensor output;
    };
    std::vector<Node> nodes_;
};

// Execution context threaded through every operation.
//   tape        null -> inference, nothing recorded
//   round_fp16  rounds every op output through IEEE binary16 (benchmark mode)
//   flops       optional analytic cost accumulator (MAC = 2 FLOPs convention)
struct Ctx {
    Tape* tape = nullptr;
    bool round_fp16 = false;
    unsigned long long* flops = nullptr;

    bool grad_enabled() const { return tape != nullptr; }
    void add_flops(unsigned long long f) const {
        if (flops) *flops += f;
    }
    // Applied by every op to its freshly computed output.
    void finish(Tensor& out) const;

    static Ctx inference() { return Ctx{}; }
    static Ctx training(Tape& t) { return Ctx{&t, false, nullptr}; }
};

}  // namespace scanet
