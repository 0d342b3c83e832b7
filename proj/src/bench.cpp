#include "scanet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "scanet/dataset.hpp"
#include "scanet/flops.hpp"
#include "scanet/half.hpp"
#include "scanet/threading.hpp"

namespace scanet {

void round_params_fp16(ParamStore& params) {
    for (auto& e : params.entries()) cast_f16_roundtrip_inplace(e.tensor);
}

Scanet clone_model(const Scanet& model) {
    Scanet out(model.config(), 0);
    for (auto& e : out.params().entries()) {
        const Tensor& src = model.params().at(e.name);
        std::copy(src.data(), src.data() + src.size(), e.tensor.data());
    }
    return out;
}

BenchReport run_bench(const Scanet& model, const std::string& precision, int iters, int warmup,
                      uint64_t input_seed) {
    if (iters < 1) throw std::invalid_argument("bench: iters must be >= 1");
    if (warmup < 0) throw std::invalid_argument("bench: warmup must be >= 0");
    const bool fp16 = precision == "fp16";
    if (!fp16 && precision != "fp32") {
        throw std::invalid_argument("bench: precision must be fp32 or fp16");
    }

    const ScanetConfig& cfg = model.config();
    Tensor input = synth_generate(1, cfg.input_size, input_seed)[0].image;
    if (fp16) input = cast_f16_roundtrip(input);

    Scanet work = clone_model(model);
    if (fp16) round_params_fp16(work.params());

    // Latency is per image on a single worker.
    const int saved_threads = max_threads();
    set_max_threads(1);
    Ctx ctx;
    ctx.round_fp16 = fp16;
    for (int i = 0; i < warmup; ++i) work.forward(ctx, input, false);
    std::vector<double> ms(static_cast<size_t>(iters));
    for (int i = 0; i < iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        work.forward(ctx, input, false);
        const auto t1 = std::chrono::steady_clock::now();
        ms[static_cast<size_t>(i)] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    set_max_threads(saved_threads);

    BenchReport r;
    r.variant = cfg.variant;
    r.precision = fp16 ? "fp16" : "fp32";
    r.iterations = iters;
    r.warmup = warmup;
    double sum = 0;
    for (double v : ms) sum += v;
    r.mean_ms = sum / iters;
    std::sort(ms.begin(), ms.end());
    r.p50_ms = ms[(ms.size() - 1) / 2];
    r.p95_ms = ms[std::min(ms.size() - 1, static_cast<size_t>(ms.size() * 95 / 100))];
    r.throughput = 1000.0 / r.mean_ms;
    r.flops = count_flops(cfg);
    r.flop_convention = kFlopConvention;
    return r;
}

std::string bench_csv(const BenchReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "variant,precision,iterations,warmup,mean_ms,p50_ms,p95_ms,throughput_img_s,"
                  "flops,flop_convention\n%s,%s,%d,%d,%.6f,%.6f,%.6f,%.6f,%llu,%s\n",
                  r.variant.c_str(), r.precision.c_str(), r.iterations, r.warmup, r.mean_ms,
                  r.p50_ms, r.p95_ms, r.throughput, r.flops, r.flop_convention.c_str());
    return buf;
}

}  // namespace scanet
