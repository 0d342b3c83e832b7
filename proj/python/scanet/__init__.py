"""SCANet sky/cloud segmentation — Python bindings over the C++ core."""

try:
    from ._scanet import *  # noqa: F401,F403  (installed wheel layout)
    from ._scanet import Model, flop_convention  # noqa: F401
except ImportError:  # in-tree build: extension on PYTHONPATH
    from _scanet import *  # noqa: F401,F403
    from _scanet import Model, flop_convention  # noqa: F401

__all__ = [
    "Model",
    "conv2d",
    "relu",
    "relu6",
    "sigmoid",
    "bilinear_upsample",
    "global_avg_pool",
    "concat_channels",
    "f16_roundtrip",
    "bce_loss",
    "iou_loss",
    "metrics_from_counts",
    "confusion_from_masks",
    "pr_curve",
    "synth_generate",
    "count_flops",
    "flop_convention",
]
