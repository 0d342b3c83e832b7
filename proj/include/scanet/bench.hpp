#pragma once

#include <string>

#include "scanet/model.hpp"

namespace scanet {

struct BenchReport {
    std::string variant;
    std::string precision;  // "fp32" | "fp16"
    int iterations = 0;
    int warmup = 0;
    double mean_ms = 0;
    double p50_ms = 0;
    double p95_ms = 0;
    double throughput = 0;  // images/s, 1000 / mean_ms
    unsigned long long flops = 0;
    std::string flop_convention;
};

// Rounds every tensor (weights and buffers) through binary16.
void round_params_fp16(ParamStore& params);

// Builds a same-config model and copies the parameter values across.
Scanet clone_model(const Scanet& model);

// W warmup + N timed single-image forwards at the config resolution on one
// worker thread. fp16 mode rounds the weights once and every op output.
BenchReport run_bench(const Scanet& model, const std::string& precision, int iters, int warmup,
                      uint64_t input_seed = 1);

std::string bench_csv(const BenchReport& r);

}  // namespace scanet
