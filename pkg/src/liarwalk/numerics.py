"""Minimal dense-tensor engine with reverse-mode differentiation, the Adam
optimizer, and a finite-difference gradient checker. Exactly the primitive set
the classifier needs; no GPU, no graph compilation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError


class Tensor:
    """A dense array node on a dynamically built backward tape."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward=None, name=None):
        data = np.asarray(data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        if self.data.size != 1:
            raise NumericError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        visited = set()

        def visit(t: Tensor):
            if id(t) in visited or not t.requires_grad:
                return
            visited.add(id(t))
            for p in t._parents:
                visit(p)
            topo.append(t)

        visit(self)
        self.grad = np.ones_like(self.data)
        for t in reversed(topo):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `g` down to `shape` (reverses numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# Elementwise and linear-algebra primitives
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    out._backward = backward
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    out._backward = backward
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise NumericError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    out = Tensor(a.data @ b.data, parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T)
        if b.requires_grad:
            b.accumulate_grad(a.data.T @ g)

    out._backward = backward
    return out


def linear(x, W, b) -> Tensor:
    """y = x @ W.T + b with W shaped (out, in)."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    if x.shape[-1] != W.shape[1]:
        raise NumericError(f"linear shape mismatch: x {x.shape}, W {W.shape}")
    out = Tensor(x.data @ W.data.T + b.data, parents=(x, W, b))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g @ W.data)
        if W.requires_grad:
            W.accumulate_grad(g.T @ x.data)
        if b.requires_grad:
            b.accumulate_grad(g.sum(axis=0))

    out._backward = backward
    return out


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(y, parents=(x,))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * y * (1.0 - y))

    out._backward = backward
    return out


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    out = Tensor(y, parents=(x,))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * (1.0 - y * y))

    out._backward = backward
    return out


def elu(x) -> Tensor:
    """ELU with alpha = 1: x for x > 0, exp(x) - 1 otherwise."""
    x = as_tensor(x)
    neg = np.exp(np.minimum(x.data, 0.0)) - 1.0
    y = np.where(x.data > 0.0, x.data, neg)
    out = Tensor(y, parents=(x,))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * np.where(x.data > 0.0, 1.0, neg + 1.0))

    out._backward = backward
    return out


def tsum(x) -> Tensor:
    """Sum of all elements (scalar); handy for reducing test losses."""
    x = as_tensor(x)
    out = Tensor(x.data.sum(), parents=(x,))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(np.broadcast_to(g, x.shape).copy())

    out._backward = backward
    return out


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    out = Tensor(x.data.reshape(shape), parents=(x,))

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g.reshape(x.shape))

    out._backward = backward
    return out


def concat(tensors, axis=-1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), parents=tuple(tensors))
    sizes = [t.shape[axis] for t in tensors]

    def backward(g):
        offset = 0
        for t, n in zip(tensors, sizes):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(offset, offset + n)
                t.accumulate_grad(g[tuple(sl)])
            offset += n

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# Convolution / pooling (1-D, valid padding, stride 1; pool stride = window)
# ---------------------------------------------------------------------------

def conv1d_valid(x, W, b) -> Tensor:
    """Cross-correlation of x (.., C_in, L) with W (C_out, C_in, K) plus bias."""
    x, W, b = as_tensor(x), as_tensor(W), as_tensor(b)
    batched = x.data.ndim == 3
    xd = x.data if batched else x.data[None]
    B, c_in, L = xd.shape
    c_out, c_in_w, K = W.shape
    if c_in != c_in_w:
        raise NumericError(f"conv1d channel mismatch: input {c_in}, kernel {c_in_w}")
    if L < K:
        raise NumericError(f"conv1d input length {L} shorter than kernel {K}")
    windows = np.lib.stride_tricks.sliding_window_view(xd, K, axis=-1)  # (B,Cin,Lout,K)
    y = np.einsum("bclk,ock->bol", windows, W.data, optimize=True) + b.data[None, :, None]
    out = Tensor(y if batched else y[0], parents=(x, W, b))
    l_out = L - K + 1

    def backward(g):
        gb = g if batched else g[None]
        if W.requires_grad:
            W.accumulate_grad(np.einsum("bclk,bol->ock", windows, gb, optimize=True))
        if b.requires_grad:
            b.accumulate_grad(gb.sum(axis=(0, 2)))
        if x.requires_grad:
            gx = np.zeros_like(xd)
            for k in range(K):
                gx[:, :, k:k + l_out] += np.einsum("bol,oc->bcl", gb, W.data[:, :, k])
            x.accumulate_grad(gx if batched else gx[0])

    out._backward = backward
    return out


def maxpool1d(x, window: int = 3, stride: int | None = None) -> Tensor:
    """Per-window max over the length axis; trailing remainder dropped.
    Gradient is routed to the first maximal index in each window."""
    x = as_tensor(x)
    if stride is None:
        stride = window
    if stride != window:
        raise NumericError("maxpool1d supports stride == window only")
    batched = x.data.ndim == 3
    xd = x.data if batched else x.data[None]
    B, C, L = xd.shape
    if L < window:
        raise NumericError(f"maxpool1d input length {L} shorter than window {window}")
    n = L // window
    blocks = xd[:, :, : n * window].reshape(B, C, n, window)
    idx = blocks.argmax(axis=-1)
    y = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
    out = Tensor(y if batched else y[0], parents=(x,))

    def backward(g):
        gb = g if batched else g[None]
        gx_blocks = np.zeros_like(blocks)
        np.put_along_axis(gx_blocks, idx[..., None], gb[..., None], axis=-1)
        gx = np.zeros_like(xd)
        gx[:, :, : n * window] = gx_blocks.reshape(B, C, n * window)
        x.accumulate_grad(gx if batched else gx[0])

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------

def softmax_cross_entropy(logits, labels) -> tuple[Tensor, np.ndarray]:
    """Mean negative log softmax probability of the true class.

    Returns (scalar loss tensor, batch x classes probability array).
    """
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = logits.shape[-1]
    if labels.min() < 0 or labels.max() >= n_classes:
        raise NumericError(f"labels out of domain for {n_classes} classes")
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    probs = ez / ez.sum(axis=-1, keepdims=True)
    B = labels.shape[0]
    logp = z - np.log(ez.sum(axis=-1, keepdims=True))
    loss_val = -logp[np.arange(B), labels].mean()
    out = Tensor(loss_val, parents=(logits,))

    def backward(g):
        if logits.requires_grad:
            gl = probs.copy()
            gl[np.arange(B), labels] -= 1.0
            logits.accumulate_grad(g * gl / B)

    out._backward = backward
    return out, probs


# ---------------------------------------------------------------------------
# Adam optimizer (L2-coupled weight decay, bias correction)
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(params, grads, state: AdamState, lr: float, weight_decay: float = 0.0):
    """One Adam update in place; weight decay is added to the gradient (L2-coupled)."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise NumericError("adam_step: params/grads/state length mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.data.shape:
            raise NumericError(f"adam_step shape mismatch: {g.shape} vs {p.data.shape}")
        if weight_decay:
            g = g + weight_decay * p.data
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

@dataclass
class GradCheckReport:
    max_rel_error: float
    per_param: dict[str, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def grad_check(loss_fn, params, tolerance: float = 1e-6, h: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients of loss_fn() against central finite differences
    over every scalar in `params` (list of Tensors the closure reads)."""
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    per_param = {}
    worst = 0.0
    for i, p in enumerate(params):
        flat = p.data.reshape(-1)
        num = np.zeros_like(flat)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            lp = float(loss_fn().data)
            flat[j] = orig - h
            lm = float(loss_fn().data)
            flat[j] = orig
            num[j] = (lp - lm) / (2.0 * h)
        a = analytic[i].reshape(-1)
        rel = np.abs(a - num) / np.maximum(np.maximum(np.abs(a), np.abs(num)), 1e-8)
        err = float(rel.max()) if rel.size else 0.0
        per_param[p.name or f"param{i}"] = err
        worst = max(worst, err)
    return GradCheckReport(max_rel_error=worst, per_param=per_param, tolerance=tolerance)
