#include "scanet/flops.hpp"

namespace scanet {

const char* kFlopConvention = "MAC=2FLOPs;conv-bias-excluded;bn-fused-2/elem";

unsigned long long count_flops(const ScanetConfig& cfg) {
    Scanet model(cfg, 0);
    unsigned long long flops = 0;
    Ctx ctx;
    ctx.flops = &flops;
    Tensor input({1, 3, cfg.input_size, cfg.input_size});
    model.forward(ctx, input, false);
    return flops;
}

}  // namespace scanet
