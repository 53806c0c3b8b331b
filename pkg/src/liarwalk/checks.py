"""Gradient-integrity harness: finite-difference checks for every primitive and
for the full classifier on a reduced architecture."""

from __future__ import annotations

import numpy as np

from . import numerics as nm
from .network import Model, ModelConfig, forward_batch
from .numerics import GradCheckReport, Tensor, grad_check


def reduced_config(seed: int = 0) -> ModelConfig:
    """Small architecture (hidden 8/8/4, T=8, conv depths 4/2) that keeps a
    full-model finite-difference sweep fast."""
    return ModelConfig(
        t_frames=8,
        hidden_sizes=(8, 8, 4),
        conv1_channels=4,
        conv2_channels=2,
        fc_sizes=(6, 4),
        seed=seed,
    )


def _weighted_sum(out: Tensor, rng: np.random.Generator) -> Tensor:
    w = rng.normal(size=out.shape)
    return nm.tsum(nm.mul(out, Tensor(w)))


def primitive_grad_checks(seed: int = 0, tolerance: float = 1e-6) -> dict[str, GradCheckReport]:
    """Check every differentiable primitive against central differences."""
    rng = np.random.default_rng(seed)
    reports: dict[str, GradCheckReport] = {}

    def check(name, params, loss_fn):
        reports[name] = grad_check(loss_fn, params, tolerance=tolerance)

    A = Tensor(rng.normal(size=(4, 5)), requires_grad=True, name="A")
    B = Tensor(rng.normal(size=(5, 3)), requires_grad=True, name="B")
    check("matmul", [A, B], lambda: _weighted_sum(nm.matmul(A, B), np.random.default_rng(1)))

    x = Tensor(rng.normal(size=(3, 7)), requires_grad=True, name="x")
    y = Tensor(rng.normal(size=(3, 7)), requires_grad=True, name="y")
    bias = Tensor(rng.normal(size=(7,)), requires_grad=True, name="bias")
    check("add", [x, y], lambda: _weighted_sum(nm.add(x, y), np.random.default_rng(2)))
    check("add_broadcast", [x, bias],
          lambda: _weighted_sum(nm.add(x, bias), np.random.default_rng(3)))
    check("mul", [x, y], lambda: _weighted_sum(nm.mul(x, y), np.random.default_rng(4)))
    for name, op in (("elu", nm.elu), ("sigmoid", nm.sigmoid), ("tanh", nm.tanh)):
        check(name, [x], lambda op=op: _weighted_sum(op(x), np.random.default_rng(5)))

    xc = Tensor(rng.normal(size=(2, 3, 12)), requires_grad=True, name="xc")
    Wc = Tensor(rng.normal(size=(4, 3, 3)), requires_grad=True, name="Wc")
    bc = Tensor(rng.normal(size=(4,)), requires_grad=True, name="bc")
    check("conv1d_valid", [xc, Wc, bc],
          lambda: _weighted_sum(nm.conv1d_valid(xc, Wc, bc), np.random.default_rng(6)))
    check("maxpool1d", [xc],
          lambda: _weighted_sum(nm.maxpool1d(xc, 3), np.random.default_rng(7)))

    Wl = Tensor(rng.normal(size=(4, 7)), requires_grad=True, name="Wl")
    bl = Tensor(rng.normal(size=(4,)), requires_grad=True, name="bl")
    check("linear", [x, Wl, bl],
          lambda: _weighted_sum(nm.linear(x, Wl, bl), np.random.default_rng(8)))

    logits = Tensor(rng.normal(size=(5, 2)), requires_grad=True, name="logits")
    labels = rng.integers(0, 2, size=5)
    check("softmax_cross_entropy", [logits],
          lambda: nm.softmax_cross_entropy(logits, labels)[0])
    return reports


def full_model_grad_check(seed: int = 0, tolerance: float = 1e-4,
                          batch: int = 2, h: float = 2e-4) -> GradCheckReport:
    """Central-difference check of the entire reduced classifier, LSTM included.

    The step is larger than the per-primitive default: some deep-LSTM gradient
    entries are ~1e-9, where fd roundoff (eps*|loss|/h) at h=1e-5 would swamp
    the 1e-8 relative-error floor. h=2e-4 keeps roundoff well under tolerance
    while staying below the scale where truncation and maxpool argmax flips
    take over.
    """
    cfg = reduced_config(seed)
    model = Model.create(cfg)
    rng = np.random.default_rng(seed + 1)
    x = rng.uniform(0.0, 1.0, size=(batch, cfg.t_frames, cfg.input_dim))
    gait = rng.uniform(0.0, 1.0, size=(batch, cfg.gait_dim))
    gesture = rng.integers(0, 2, size=(batch, cfg.gesture_dim)).astype(np.float64)
    labels = rng.integers(0, 2, size=batch)
    params = model.param_list()

    def loss_fn():
        logits = forward_batch(model, x, gait, gesture, "all")
        return nm.softmax_cross_entropy(logits, labels)[0]

    return grad_check(loss_fn, params, tolerance=tolerance, h=h)
