#include <cmath>

#include <doctest.h>

#include "ref_ops.hpp"
#include "scanet/gradcheck.hpp"
#include "scanet/losses.hpp"
#include "scanet/metrics.hpp"
#include "test_helpers.hpp"

using namespace scanet;
using scanet::test::random_tensor;

namespace {

Ctx no_grad;

// Brute-force recomputation of the six metrics straight from the formulas.
struct RefMetrics {
    double acc, prec, rec, f, err, miou;
};

RefMetrics ref_metrics(uint64_t tp, uint64_t fp, uint64_t fn, uint64_t tn) {
    const double total = static_cast<double>(tp + fp + fn + tn);
    RefMetrics r{};
    r.acc = (double)(tp + tn) / total;
    r.prec = (tp + fp) == 0 ? 1.0 : (double)tp / (double)(tp + fp);
    r.rec = (tp + fn) == 0 ? 1.0 : (double)tp / (double)(tp + fn);
    r.f = (r.prec + r.rec) == 0 ? 0.0 : 2.0 * r.prec * r.rec / (r.prec + r.rec);
    r.err = (double)(fp + fn) / total;
    const double mp = (fn + fp + tp) == 0 ? 1.0 : (double)tp / (double)(fn + fp + tp);
    const double mn = (tn + fn + fp) == 0 ? 1.0 : (double)tn / (double)(tn + fn + fp);
    r.miou = 0.5 * (mp + mn);
    return r;
}

}  // namespace

TEST_CASE("bce matches -ln(0.5) and vanishes at a perfect prediction") {
    Tensor half = Tensor::full({1, 1, 4, 4}, 0.5f);
    Tensor ones = Tensor::full({1, 1, 4, 4}, 1.0f);
    CHECK(bce_loss(no_grad, half, ones).item() == doctest::Approx(0.693147).epsilon(1e-5));

    Tensor p = Tensor::from_data({1, 1, 2, 2}, {1.0f, 0.0f, 1.0f, 0.0f});
    Tensor y = p.clone();
    CHECK(bce_loss(no_grad, p, y).item() <= 1.7e-5);  // clamp floor: ~1e-7*|ln 1e-7|

    CHECK_THROWS_AS(bce_loss(no_grad, half, Tensor({1, 1, 2, 2})), std::invalid_argument);
}

TEST_CASE("bce gradient is -1/p at (p=0.5, y=1, N=1) and matches finite differences") {
    Tensor p = Tensor::scalar(0.5f, true);
    Tensor y = Tensor::scalar(1.0f);
    {
        Tape tape;
        Ctx ctx = Ctx::training(tape);
        Tensor loss = bce_loss(ctx, p, y);
        tape.backward(loss);
        CHECK(p.grad()[0] == doctest::Approx(-2.0).epsilon(1e-6));
    }
    p.zero_grad();
    const double err = finite_diff_check(
        {p}, [&](Ctx& ctx) { return bce_loss(ctx, p, y); }, 1e-3,
        [&] { return ref::bce(ref::widen(p), ref::widen(y)); });
    CHECK(err < 1e-4);
}

TEST_CASE("iou loss endpoints: perfect 0, total miss 1, empty masks 1") {
    Tensor ones = Tensor::full({1, 1, 3, 3}, 1.0f);
    Tensor zeros = Tensor::zeros({1, 1, 3, 3});
    CHECK(iou_loss(no_grad, ones, ones).item() == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(iou_loss(no_grad, ones, zeros).item() == doctest::Approx(1.0).epsilon(1e-6));
    // y = p = 0: every term is 0 / eps_d, so the loss is exactly 1.
    CHECK(iou_loss(no_grad, zeros, zeros).item() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bce + iou gradient matches finite differences on a random map") {
    Tensor p = random_tensor({1, 1, 8, 8}, 300, 0.1f, 0.9f, true);
    Tensor y({1, 1, 8, 8});
    Rng bits(301);
    for (float& v : y.values()) v = (bits.next_u32() & 1u) ? 1.0f : 0.0f;
    const double err = finite_diff_check(
        {p},
        [&](Ctx& ctx) { return ops::add(ctx, bce_loss(ctx, p, y), iou_loss(ctx, p, y)); }, 1e-3,
        [&] {
            return ref::bce(ref::widen(p), ref::widen(y)) +
                   ref::iou(ref::widen(p), ref::widen(y));
        });
    CHECK(err < 1e-3);
}

TEST_CASE("loss ranges: bce >= 0 and iou in [0, 1] on random inputs") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Tensor p = random_tensor({1, 1, 6, 6}, seed, 0.001f, 0.999f);
        Rng bits(seed + 100);
        Tensor y({1, 1, 6, 6});
        for (float& v : y.values()) v = (bits.next_u32() & 1u) ? 1.0f : 0.0f;
        CHECK(bce_loss(no_grad, p, y).item() >= 0.0f);
        const float iou = iou_loss(no_grad, p, y).item();
        CHECK(iou >= 0.0f);
        CHECK(iou <= 1.0f);
    }
}

TEST_CASE("bce is invariant under simultaneous spatial permutation") {
    Tensor p = random_tensor({1, 1, 4, 4}, 310, 0.05f, 0.95f);
    Tensor y = random_tensor({1, 1, 4, 4}, 311, 0.0f, 1.0f);
    // Reverse both maps the same way.
    Tensor pr = flip_horizontal(flip_vertical(p));
    Tensor yr = flip_horizontal(flip_vertical(y));
    const double a = bce_loss(no_grad, p, y).item();
    const double b = bce_loss(no_grad, pr, yr).item();
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("total loss: stage selection, recomputation oracle, alpha linearity") {
    // Build a fake four-stage pyramid over a 32x32 ground truth.
    Rng bits(320);
    Tensor gt({1, 1, 32, 32});
    for (float& v : gt.values()) v = (bits.next_u32() & 1u) ? 1.0f : 0.0f;
    std::array<Tensor, 4> preds;
    const int sizes[4] = {4, 8, 16, 32};
    for (int i = 0; i < 4; ++i) {
        preds[i] = random_tensor({1, 1, sizes[i], sizes[i]}, 321 + i, 0.05f, 0.95f);
    }

    LossWeights only_last;
    only_last.alpha = {0, 0, 0, 1};
    const double lhs = total_loss(no_grad, preds, gt, only_last).item();
    const double rhs = bce_loss(no_grad, preds[3], gt).item() +
                       iou_loss(no_grad, preds[3], gt).item();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));

    LossWeights all;
    double recomputed = 0;
    for (int i = 0; i < 4; ++i) {
        Tensor yi = i == 3 ? gt : nearest_downsample(gt, sizes[i], sizes[i]);
        recomputed += bce_loss(no_grad, preds[i], yi).item() +
                      iou_loss(no_grad, preds[i], yi).item();
    }
    const double full = total_loss(no_grad, preds, gt, all).item();
    CHECK(full == doctest::Approx(recomputed).epsilon(1e-6));

    LossWeights doubled;
    doubled.alpha = {2, 2, 2, 2};
    CHECK(total_loss(no_grad, preds, gt, doubled).item() ==
          doctest::Approx(2.0 * full).epsilon(1e-6));

    // Perfect predictions at every stage. The per-pixel iou term is 0 at
    // y = p = 0, so zero loss needs an all-cloud mask.
    Tensor cloud = Tensor::full({1, 1, 32, 32}, 1.0f);
    std::array<Tensor, 4> perfect;
    for (int i = 0; i < 4; ++i) {
        perfect[i] = i == 3 ? cloud.clone() : Tensor::full({1, 1, sizes[i], sizes[i]}, 1.0f);
    }
    CHECK(total_loss(no_grad, perfect, cloud, all).item() < 1e-4);

    // Final stage resolution must match the ground truth.
    std::array<Tensor, 4> bad = preds;
    bad[3] = random_tensor({1, 1, 16, 16}, 330, 0.1f, 0.9f);
    CHECK_THROWS_AS(total_loss(no_grad, bad, gt, all), std::invalid_argument);

    LossWeights zeroed;
    zeroed.alpha = {0, 0, 0, 0};
    CHECK_THROWS_AS(total_loss(no_grad, preds, gt, zeroed), std::invalid_argument);
}

TEST_CASE("nearest downsample keeps masks binary") {
    Rng bits(340);
    Tensor gt({1, 1, 37, 41});
    for (float& v : gt.values()) v = (bits.next_u32() & 1u) ? 1.0f : 0.0f;
    Tensor small = nearest_downsample(gt, 9, 11);
    for (float v : small.values()) CHECK((v == 0.0f || v == 1.0f));
}

TEST_CASE("confusion counts: hand-tallied 3x3 case and degenerate layouts") {
    Tensor pred = Tensor::from_data({1, 1, 3, 3},
                                    {0.9f, 0.8f, 0.2f, 0.6f, 0.4f, 0.4f, 0.9f, 0.1f, 0.7f});
    Tensor gt = Tensor::from_data({1, 1, 3, 3}, {1, 1, 0, 1, 1, 0, 0, 0, 1});
    const ConfusionCounts c = confusion_from_masks(pred, gt, 0.5);
    CHECK(c.tp == 4);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 3);

    // Independent tally straight off the arrays.
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < 9; ++i) {
        const bool hit = pred.data()[i] >= 0.5f;
        const bool pos = gt.data()[i] >= 0.5f;
        tp += hit && pos;
        fp += hit && !pos;
        fn += !hit && pos;
        tn += !hit && !pos;
    }
    CHECK(c.tp == tp);
    CHECK(c.fp == fp);
    CHECK(c.fn == fn);
    CHECK(c.tn == tn);

    const ConfusionCounts exact = confusion_from_masks(gt, gt, 0.5);
    CHECK(exact.fp == 0);
    CHECK(exact.fn == 0);
    const ConfusionCounts inv = confusion_from_masks(ops::one_minus(no_grad, gt), gt, 0.5);
    CHECK(inv.tp == 0);
    CHECK(inv.tn == 0);

    CHECK_THROWS_AS(confusion_from_masks(pred, gt, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(confusion_from_masks(pred, Tensor({1, 1, 2, 3}), 0.5), std::invalid_argument);
}

TEST_CASE("metrics_from_counts matches the worked example and brute force") {
    const Metrics m = metrics_from_counts({4, 1, 1, 3});
    CHECK(m.precision == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(m.recall == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(m.accuracy == doctest::Approx(7.0 / 9.0).epsilon(1e-9));
    CHECK(m.error_rate == doctest::Approx(2.0 / 9.0).epsilon(1e-9));
    CHECK(m.miou == doctest::Approx(0.5 * (4.0 / 6.0 + 3.0 / 5.0)).epsilon(1e-9));
    CHECK(m.f_score == doctest::Approx(0.8).epsilon(1e-9));
    CHECK_FALSE(m.degenerate);

    const Metrics perfect = metrics_from_counts({5, 0, 0, 4});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f_score == 1.0);
    CHECK(perfect.miou == 1.0);
    CHECK(perfect.error_rate == 0.0);

    // Absent positive class: 0/0 ratios define as 1 and set the flag.
    const Metrics absent = metrics_from_counts({0, 0, 0, 9});
    CHECK(absent.precision == 1.0);
    CHECK(absent.accuracy == 1.0);
    CHECK(absent.degenerate);

    CHECK_THROWS_AS(metrics_from_counts({0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("50 random confusion tables match brute force to 1e-9, acc+err == 1") {
    Rng rng(777);
    for (int i = 0; i < 50; ++i) {
        ConfusionCounts c;
        c.tp = rng.next_u32() % 10000;
        c.fp = rng.next_u32() % 10000;
        c.fn = rng.next_u32() % 10000;
        c.tn = 1 + rng.next_u32() % 10000;
        const Metrics m = metrics_from_counts(c);
        const RefMetrics r = ref_metrics(c.tp, c.fp, c.fn, c.tn);
        CHECK(std::abs(m.accuracy - r.acc) < 1e-9);
        CHECK(std::abs(m.precision - r.prec) < 1e-9);
        CHECK(std::abs(m.recall - r.rec) < 1e-9);
        CHECK(std::abs(m.f_score - r.f) < 1e-9);
        CHECK(std::abs(m.error_rate - r.err) < 1e-9);
        CHECK(std::abs(m.miou - r.miou) < 1e-9);
        CHECK(m.accuracy + m.error_rate == 1.0);
    }
}

TEST_CASE("pr curve endpoints and recomputation oracle") {
    // Random 4-image batch.
    std::vector<Tensor> preds, gts;
    for (int i = 0; i < 4; ++i) {
        preds.push_back(random_tensor({1, 1, 8, 8}, 400 + i, 0.01f, 0.99f));
        Tensor g({1, 1, 8, 8});
        Rng bits(410 + i);
        for (float& v : g.values()) v = (bits.next_u32() & 1u) ? 1.0f : 0.0f;
        gts.push_back(g);
    }
    const auto curve = pr_curve(preds, gts, 64);
    REQUIRE(curve.size() == 64);
    CHECK(curve.front().threshold == 0.0);
    CHECK(curve.front().recall == 1.0);  // everything predicted positive
    for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].recall <= curve[i - 1].recall);

    // Each point equals confusion_from_masks + metrics_from_counts composed.
    for (const PrPoint& pt : curve) {
        ConfusionCounts pooled;
        for (size_t i = 0; i < preds.size(); ++i) {
            pooled += tally_at_threshold(preds[i], gts[i], pt.threshold);
        }
        const Metrics m = metrics_from_counts(pooled);
        CHECK(std::abs(pt.precision - m.precision) < 1e-12);
        CHECK(std::abs(pt.recall - m.recall) < 1e-12);
    }

    CHECK_THROWS_AS(pr_curve({}, {}, 16), std::invalid_argument);
}

TEST_CASE("perfect predictor: precision 1 wherever predictions exist, f = 1") {
    std::vector<Tensor> preds, gts;
    Tensor g({1, 1, 6, 6});
    Rng bits(420);
    for (float& v : g.values()) v = (bits.next_u32() & 1u) ? 1.0f : 0.0f;
    preds.push_back(g.clone());
    gts.push_back(g);
    const auto curve = pr_curve(preds, gts, 32);
    const auto fm = f_measure_curve(preds, gts, 32);
    for (size_t i = 1; i < curve.size(); ++i) {  // skip threshold 0
        CHECK(curve[i].precision == 1.0);
        if (fm[i].threshold < 1.0) CHECK(fm[i].f_score == 1.0);
    }
}

TEST_CASE("f-measure curve: step at 0.5 for a constant map, consistency with PR") {
    std::vector<Tensor> preds{Tensor::full({1, 1, 8, 8}, 0.5f)};
    Rng bits(430);
    Tensor g({1, 1, 8, 8});
    for (float& v : g.values()) v = (bits.next_u32() & 1u) ? 1.0f : 0.0f;
    std::vector<Tensor> gts{g};
    const auto fm = f_measure_curve(preds, gts, 33);
    // Two-valued: one value while 0.5 >= t, another after.
    CHECK(fm.front().f_score == fm[16].f_score);   // t = 0.5 still predicted
    CHECK(fm[17].f_score != fm.front().f_score);
    CHECK(fm.back().f_score == fm[17].f_score);

    const auto pr = pr_curve(preds, gts, 33);
    for (size_t i = 0; i < fm.size(); ++i) {
        const double p = pr[i].precision, r = pr[i].recall;
        const double expect = (p + r) == 0 ? 0.0 : 2.0 * p * r / (p + r);
        CHECK(std::abs(fm[i].f_score - expect) < 1e-9);
    }
}

TEST_CASE("curve CSV serialization: header, row count, 6 decimals") {
    std::vector<PrPoint> pts{{0.0, 1.0, 0.5}, {0.5, 0.25, 0.125}};
    const std::string csv = pr_curve_csv(pts);
    CHECK(csv == "threshold,precision,recall\n0.000000,1.000000,0.500000\n"
                 "0.500000,0.250000,0.125000\n");
    const std::string fcsv = f_measure_curve_csv({{1.0, 0.75}});
    CHECK(fcsv == "threshold,f_score\n1.000000,0.750000\n");
}
