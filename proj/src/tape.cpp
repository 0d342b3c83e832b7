#include "scanet/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "scanet/half.hpp"

namespace scanet {

void Tape::backward(Tensor loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw std::invalid_argument("backward() requires a scalar loss, got shape " +
                                    (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
    }
    for (Node& n : nodes_) n.output.zero_grad();
    loss.grad()[0] += 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->fn();
}

void Ctx::finish(Tensor& out) const {
    if (!round_fp16) return;
    for (float& v : out.values()) {
        v = f16_round(v);
        if (std::isnan(v)) {
            throw std::runtime_error("NaN activation encountered in fp16-emulated forward");
        }
    }
}

}  // namespace scanet
