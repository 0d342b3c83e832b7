"""Smoke tests for the Python bindings (run under ctest; plain asserts)."""

import math
import sys

import numpy as np

import scanet


def test_ops():
    x = np.ones((1, 1, 3, 3), dtype=np.float32)
    w = np.ones((1, 1, 3, 3), dtype=np.float32)
    y = scanet.conv2d(x, w)
    assert y.shape == (1, 1, 1, 1)
    assert y[0, 0, 0, 0] == 9.0

    r = scanet.relu6(np.array([[[[7.5, -2.0, 3.0]]]], dtype=np.float32))
    assert r[0, 0, 0, 0] == 6.0 and r[0, 0, 0, 1] == 0.0 and r[0, 0, 0, 2] == 3.0

    s = scanet.sigmoid(np.zeros((1, 1, 1, 1), dtype=np.float32))
    assert s[0, 0, 0, 0] == 0.5

    up = scanet.bilinear_upsample(np.full((1, 2, 3, 3), 1.5, dtype=np.float32), 2)
    assert up.shape == (1, 2, 6, 6)
    assert np.all(up == 1.5)


def test_f16():
    out = scanet.f16_roundtrip(np.array([1.0, 1e-8, 70000.0], dtype=np.float32))
    assert out[0] == 1.0
    assert out[1] == 0.0
    assert out[2] == 65504.0


def test_losses_metrics():
    p = np.full((1, 1, 4, 4), 0.5, dtype=np.float32)
    y = np.ones((1, 1, 4, 4), dtype=np.float32)
    assert abs(scanet.bce_loss(p, y) - math.log(2.0)) < 1e-5
    assert abs(scanet.iou_loss(y, y)) < 1e-6

    m = scanet.metrics_from_counts(4, 1, 1, 3)
    assert abs(m["precision"] - 0.8) < 1e-9
    assert abs(m["miou"] - 0.5 * (4 / 6 + 3 / 5)) < 1e-9
    assert m["accuracy"] + m["error_rate"] == 1.0

    tp, fp, fn, tn = scanet.confusion_from_masks(y, y, 0.5)
    assert (tp, fp, fn, tn) == (16, 0, 0, 0)

    curve = scanet.pr_curve([y], [y], 16)
    assert len(curve) == 16


def test_model():
    model = scanet.Model(variant="lite", size=64, seed=7)
    assert model.param_count <= 120000
    img = np.random.RandomState(0).uniform(-0.5, 0.5, (1, 3, 64, 64)).astype(np.float32)
    out = model.forward(img)
    assert out["s1"].shape == (1, 1, 8, 8)
    assert out["s4"].shape == (1, 1, 64, 64)
    assert out["m2"].shape[2] == 8
    for key in ("s1", "s2", "s3", "s4"):
        v = out[key]
        assert np.all(v > 0.0) and np.all(v < 1.0)

    mask = model.infer_mask(img)
    assert mask.dtype == np.uint8
    assert set(np.unique(mask)).issubset({0, 255})

    # Deterministic rebuild and checkpoint round trip.
    again = scanet.Model(variant="lite", size=64, seed=7)
    out2 = again.forward(img)
    assert np.array_equal(out["s4"], out2["s4"])

    import tempfile, os

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "m.ckpt")
        model.save(path)
        loaded = scanet.Model.load(path)
        assert loaded.input_size == 64
        out3 = loaded.forward(img)
        assert np.array_equal(out["s4"], out3["s4"])


def test_synth_and_flops():
    samples = scanet.synth_generate(2, 32, 5)
    assert len(samples) == 2
    img, mask = samples[0]
    assert img.shape == (1, 3, 32, 32)
    assert set(np.unique(mask)).issubset({0.0, 1.0})
    again, _ = scanet.synth_generate(2, 32, 5)[0]
    assert np.array_equal(img, again)

    flops = scanet.count_flops("lite", 64)
    assert flops > 0
    assert "MAC=2" in scanet.flop_convention


def main():
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
    print("python smoke: all passed")


if __name__ == "__main__":
    sys.exit(main())
