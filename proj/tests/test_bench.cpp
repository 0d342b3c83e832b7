#include <doctest.h>

#include "scanet/bench.hpp"
#include "scanet/flops.hpp"
#include "scanet/ops.hpp"
#include "test_helpers.hpp"

using namespace scanet;

TEST_CASE("flop counting convention on a bare conv") {
    // 1x1 conv, 1 -> 1 channel on 10x10: 100 MACs = 200 FLOPs, bias excluded.
    unsigned long long flops = 0;
    Ctx ctx;
    ctx.flops = &flops;
    Tensor x({1, 1, 10, 10});
    Tensor w({1, 1, 1, 1});
    ops::conv2d(ctx, x, w, Tensor{}, 1, 0, 1);
    CHECK(flops == 200);

    // Doubling the resolution quadruples conv cost.
    unsigned long long flops2 = 0;
    ctx.flops = &flops2;
    ops::conv2d(ctx, Tensor({1, 1, 20, 20}), w, Tensor{}, 1, 0, 1);
    CHECK(flops2 == 4 * flops);
}

TEST_CASE("lite model flops at 320 are within an order of magnitude of 111.216M") {
    const unsigned long long flops = count_flops(ScanetConfig::lite(320));
    MESSAGE("lite@320 flops: ", flops);
    CHECK(flops > 11121600ull);      // 111.216 MFLOPs / 10
    CHECK(flops < 1112160000ull);    // 111.216 MFLOPs * 10
    CHECK(std::string(kFlopConvention).find("MAC=2") != std::string::npos);
}

TEST_CASE("bench report fields: iterations echoed, percentiles ordered, throughput") {
    Scanet model(ScanetConfig::lite(32), 1);
    const BenchReport r = run_bench(model, "fp32", 6, 1);
    CHECK(r.iterations == 6);
    CHECK(r.warmup == 1);
    CHECK(r.variant == "lite");
    CHECK(r.precision == "fp32");
    CHECK(r.p50_ms <= r.p95_ms);
    CHECK(r.mean_ms > 0);
    CHECK(r.throughput == doctest::Approx(1000.0 / r.mean_ms).epsilon(0.05));
    CHECK(r.flops == count_flops(model.config()));

    const std::string csv = bench_csv(r);
    CHECK(csv.find("variant,precision,iterations") == 0);
    CHECK(csv.find("lite,fp32,6,1,") != std::string::npos);

    CHECK_THROWS_AS(run_bench(model, "fp32", 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(run_bench(model, "int8", 1, 0), std::invalid_argument);
}

TEST_CASE("fp16 bench path runs without NaN and reports fp16") {
    Scanet model(ScanetConfig::lite(32), 2);
    const BenchReport r = run_bench(model, "fp16", 3, 0);
    CHECK(r.precision == "fp16");
    CHECK(r.mean_ms > 0);
}

TEST_CASE("mean latency is stable across two runs (coarse sanity bound)") {
    Scanet model(ScanetConfig::lite(32), 3);
    const BenchReport a = run_bench(model, "fp32", 10, 2);
    const BenchReport b = run_bench(model, "fp32", 10, 2);
    const double ratio = a.mean_ms > b.mean_ms ? a.mean_ms / b.mean_ms : b.mean_ms / a.mean_ms;
    MESSAGE("two-run latency ratio: ", ratio);
    // 20% is typical on an idle machine; bound loosely for shared CI boxes.
    CHECK(ratio < 2.0);
}

TEST_CASE("fp16 parameter rounding is idempotent at the store level") {
    Scanet model(ScanetConfig::lite(32), 4);
    Scanet c1 = clone_model(model);
    round_params_fp16(c1.params());
    Scanet c2 = clone_model(c1);
    round_params_fp16(c2.params());
    for (size_t i = 0; i < c1.params().size(); ++i) {
        CHECK(scanet::test::bitwise_equal(c1.params().entries()[i].tensor,
                                          c2.params().entries()[i].tensor));
    }
}
