"""The deception classifier: a stacked-LSTM deep-feature module, feature
concatenation, a conv/pool module and an FC head with softmax output, plus
binary checkpoint save/load."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from . import numerics as nm
from .errors import DataFormatError, NumericError
from .gait_features import gait_feature_vector
from .gesture_features import encode_gestures
from .numerics import Tensor
from .pose_data import (
    DataPoint,
    NormStats,
    PoseSequence,
    condition_length,
    minmax_apply,
    similarity_normalize,
)

FEATURE_MODES = ("gestures", "gait", "gestures+gait", "deep", "all")


@dataclass(frozen=True)
class ModelConfig:
    t_frames: int = 240
    input_dim: int = 48
    hidden_sizes: tuple = (128, 128, 64, 64, 32, 32)
    conv1_channels: int = 48
    conv2_channels: int = 16
    kernel_size: int = 3
    pool_window: int = 3
    fc_sizes: tuple = (32, 8)
    n_classes: int = 2
    gait_dim: int = 29
    gesture_dim: int = 7
    seed: int = 0
    elu_after_conv: bool = True
    concat_order: tuple = ("deep", "gait", "gesture")

    @property
    def deep_dim(self) -> int:
        return self.hidden_sizes[-1]

    @property
    def concat_dim(self) -> int:
        return self.deep_dim + self.gait_dim + self.gesture_dim

    def conv_lengths(self) -> tuple[int, int, int, int]:
        """Signal lengths through the conv/pool module plus the flatten size."""
        l1 = self.concat_dim - self.kernel_size + 1
        l2 = l1 // self.pool_window
        l3 = l2 - self.kernel_size + 1
        return l1, l2, l3, self.conv2_channels * l3


def _init_matrix(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(cfg: ModelConfig) -> dict[str, Tensor]:
    """Seeded parameter initialization: uniform +-1/sqrt(fan_in) per matrix,
    LSTM forget-gate bias +1."""
    rng = np.random.default_rng(cfg.seed)
    params: dict[str, Tensor] = {}

    def make(name, shape, fan_in):
        params[name] = Tensor(_init_matrix(rng, shape, fan_in), requires_grad=True, name=name)

    in_dim = cfg.input_dim
    for l, h in enumerate(cfg.hidden_sizes):
        make(f"lstm{l}.W", (4 * h, in_dim), in_dim)
        make(f"lstm{l}.U", (4 * h, h), h)
        b = np.zeros(4 * h)
        b[h:2 * h] = 1.0  # forget gate bias
        params[f"lstm{l}.b"] = Tensor(b, requires_grad=True, name=f"lstm{l}.b")
        in_dim = h
    k = cfg.kernel_size
    make("conv1.W", (cfg.conv1_channels, 1, k), k)
    params["conv1.b"] = Tensor(np.zeros(cfg.conv1_channels), requires_grad=True, name="conv1.b")
    make("conv2.W", (cfg.conv2_channels, cfg.conv1_channels, k), cfg.conv1_channels * k)
    params["conv2.b"] = Tensor(np.zeros(cfg.conv2_channels), requires_grad=True, name="conv2.b")
    flat = cfg.conv_lengths()[3]
    sizes = [flat, *cfg.fc_sizes, cfg.n_classes]
    for i in range(len(sizes) - 1):
        name = f"fc{i + 1}" if i < len(sizes) - 2 else "fc_out"
        make(f"{name}.W", (sizes[i + 1], sizes[i]), sizes[i])
        params[f"{name}.b"] = Tensor(np.zeros(sizes[i + 1]), requires_grad=True, name=f"{name}.b")
    return params


@dataclass
class Model:
    config: ModelConfig
    params: dict[str, Tensor]
    norm_stats: Optional[NormStats] = None
    extra_config: dict = field(default_factory=dict)

    @classmethod
    def create(cls, config: ModelConfig) -> "Model":
        return cls(config=config, params=init_params(config))

    def param_list(self) -> list[Tensor]:
        return [self.params[k] for k in sorted(self.params)]

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def lstm_layers(self) -> list[tuple[Tensor, Tensor, Tensor]]:
        n = len(self.config.hidden_sizes)
        return [
            (self.params[f"lstm{l}.W"], self.params[f"lstm{l}.U"], self.params[f"lstm{l}.b"])
            for l in range(n)
        ]


# ---------------------------------------------------------------------------
# Fused stacked-LSTM forward with hand-written BPTT
# ---------------------------------------------------------------------------

def lstm_forward(layers: list[tuple[Tensor, Tensor, Tensor]], x: np.ndarray) -> Tensor:
    """Run the stacked LSTM over x (B, T, input) and return the deep feature:
    the final time-step hidden state of the last layer, shape (B, H_last).

    Gate order inside the packed matrices is input, forget, output, candidate
    (the three sigmoid gates sit in one contiguous block so the recurrence can
    activate them with a single in-place pass). Initial hidden and cell states
    are zero. Gradients flow to the layer parameters via BPTT.
    """
    B, T, _ = x.shape
    caches = []
    inp = x
    for W, U, b in layers:
        h4 = W.shape[0]
        H = h4 // 4
        if W.shape[1] != inp.shape[2]:
            raise NumericError(
                f"lstm layer input mismatch: expected {W.shape[1]}, got {inp.shape[2]}"
            )
        z_in = (inp.reshape(B * T, -1) @ W.data.T).reshape(B, T, h4) + b.data
        gates = np.empty((T, B, h4))  # activated i, f, o, g per step
        c_a = np.empty((T, B, H)); tc_a = np.empty((T, B, H))
        h_a = np.empty((T, B, H))
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        tmp = np.empty((B, H))
        Ut = U.data.T
        for t in range(T):
            z = gates[t]
            np.dot(h, Ut, out=z)
            z += z_in[:, t]
            zs = z[:, :3 * H]  # sigmoid block: input, forget, output gates
            np.negative(zs, out=zs)
            np.exp(zs, out=zs)
            zs += 1.0
            np.reciprocal(zs, out=zs)
            g = z[:, 3 * H:]
            np.tanh(g, out=g)
            np.multiply(c, z[:, H:2 * H], out=c)  # f * c_prev
            np.multiply(z[:, :H], g, out=tmp)  # i * g
            c += tmp
            c_a[t] = c
            np.tanh(c, out=tc_a[t])
            np.multiply(z[:, 2 * H:3 * H], tc_a[t], out=h_a[t])  # o * tanh(c)
            h = h_a[t]
        caches.append((inp, gates, c_a, tc_a, h_a))
        inp = h_a.transpose(1, 0, 2)  # (B, T, H) feeds the next layer

    parents = tuple(p for layer in layers for p in layer)
    out = Tensor(inp[:, -1].copy(), parents=parents)

    def backward(g_out):
        d_seq = None  # (B, T, H) gradient wrt a layer's output sequence
        for (W, U, b), cache in zip(reversed(layers), reversed(caches)):
            x_l, gates, c_a, tc_a, h_a = cache
            H = c_a.shape[2]
            i_a = gates[:, :, :H]
            f_a = gates[:, :, H:2 * H]
            o_a = gates[:, :, 2 * H:3 * H]
            g_a = gates[:, :, 3 * H:]
            if d_seq is None:
                d_seq = np.zeros((B, T, H))
                d_seq[:, -1] = g_out
            # local gate-derivative factors, batched over the whole sequence
            dcdh = o_a * (1.0 - tc_a * tc_a)  # dc/dh through tanh(c)
            Di = g_a * i_a * (1.0 - i_a)
            Df = np.empty_like(f_a)
            Df[0] = 0.0  # c_{-1} = 0
            Df[1:] = c_a[:-1]
            Df *= f_a * (1.0 - f_a)
            Do = tc_a * o_a * (1.0 - o_a)
            Dg = i_a * (1.0 - g_a * g_a)
            dz_a = np.empty((T, B, 4 * H))
            dh = np.empty((B, H))
            dh_next = np.zeros((B, H))
            dc = np.empty((B, H))
            dc_next = np.zeros((B, H))
            Ud = U.data
            for t in range(T - 1, -1, -1):
                np.add(d_seq[:, t], dh_next, out=dh)
                np.multiply(dh, dcdh[t], out=dc)
                dc += dc_next
                dz = dz_a[t]
                np.multiply(dc, Di[t], out=dz[:, :H])
                np.multiply(dc, Df[t], out=dz[:, H:2 * H])
                np.multiply(dh, Do[t], out=dz[:, 2 * H:3 * H])
                np.multiply(dc, Dg[t], out=dz[:, 3 * H:])
                np.multiply(dc, f_a[t], out=dc_next)
                np.dot(dz, Ud, out=dh_next)
            dz_flat = dz_a.transpose(1, 0, 2).reshape(B * T, 4 * H)
            if W.requires_grad:
                W.accumulate_grad(dz_flat.T @ x_l.reshape(B * T, -1))
            if U.requires_grad:
                h_prev = np.zeros((T, B, H))
                h_prev[1:] = h_a[:-1]
                U.accumulate_grad(dz_flat.T @ h_prev.transpose(1, 0, 2).reshape(B * T, H))
            if b.requires_grad:
                b.accumulate_grad(dz_flat.sum(axis=0))
            d_seq = (dz_flat @ W.data).reshape(B, T, -1)

    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# Full classifier forward
# ---------------------------------------------------------------------------

def forward_batch(
    model: Model,
    x_seq: Optional[np.ndarray],
    gait: np.ndarray,
    gesture: np.ndarray,
    feature_mode: str = "all",
) -> Tensor:
    """Logits for a batch: x_seq (B, T, 48) normalized poses (may be None for
    modes that bypass the LSTM), gait (B, 29), gesture (B, 7).

    Feature modes zero out the absent segments of the concatenated vector so a
    single architecture serves the whole ablation table.
    """
    if feature_mode not in FEATURE_MODES:
        raise DataFormatError(f"unknown feature mode: {feature_mode!r}")
    cfg = model.config
    B = gait.shape[0]
    use_deep = feature_mode in ("deep", "all")
    use_gait = feature_mode in ("gait", "gestures+gait", "all")
    use_gesture = feature_mode in ("gestures", "gestures+gait", "all")

    if use_deep:
        if x_seq is None:
            raise DataFormatError("deep feature modes require the pose sequence input")
        f_d = lstm_forward(model.lstm_layers(), x_seq)
    else:
        f_d = Tensor(np.zeros((B, cfg.deep_dim)))
    gait_t = Tensor(gait if use_gait else np.zeros_like(gait))
    gesture_t = Tensor(gesture if use_gesture else np.zeros_like(gesture))

    segments = {"deep": f_d, "gait": gait_t, "gesture": gesture_t}
    vec = nm.concat([segments[k] for k in cfg.concat_order], axis=1)
    h = nm.reshape(vec, (B, 1, cfg.concat_dim))
    h = nm.conv1d_valid(h, model.params["conv1.W"], model.params["conv1.b"])
    if cfg.elu_after_conv:
        h = nm.elu(h)
    h = nm.maxpool1d(h, cfg.pool_window)
    h = nm.conv1d_valid(h, model.params["conv2.W"], model.params["conv2.b"])
    if cfg.elu_after_conv:
        h = nm.elu(h)
    h = nm.reshape(h, (B, cfg.conv_lengths()[3]))
    h = nm.elu(nm.linear(h, model.params["fc1.W"], model.params["fc1.b"]))
    h = nm.elu(nm.linear(h, model.params["fc2.W"], model.params["fc2.b"]))
    return nm.linear(h, model.params["fc_out.W"], model.params["fc_out.b"])


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=-1, keepdims=True)


def prepare_network_input(model: Model, seq: PoseSequence) -> np.ndarray:
    """Condition a (similarity-normalized) sequence to T frames and min-max
    scale it for the LSTM; feature extraction always uses the full sequence."""
    if model.norm_stats is None:
        raise DataFormatError("model has no fitted norm stats")
    conditioned = condition_length(seq, model.config.t_frames)
    scaled = minmax_apply(conditioned, model.norm_stats)
    return scaled.frames.reshape(1, model.config.t_frames, model.config.input_dim)


def classifier_forward(
    model: Model,
    seq: PoseSequence,
    f_gait: np.ndarray,
    f_gesture: np.ndarray,
    feature_mode: str = "all",
) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and logits for one sequence plus its handcrafted features."""
    need_seq = feature_mode in ("deep", "all")
    x = prepare_network_input(model, seq) if need_seq else None
    logits = forward_batch(
        model, x, f_gait.reshape(1, -1), f_gesture.reshape(1, -1), feature_mode
    ).data
    return softmax(logits)[0], logits[0]


def predict(model: Model, point: DataPoint, feature_mode: str = "all") -> int:
    """Predicted label for a raw data point: similarity-normalize, extract
    features, run the classifier; exact probability ties resolve to 0."""
    seq = similarity_normalize(point.sequence)
    f_gait = gait_feature_vector(seq)
    f_gesture = encode_gestures(point.gestures)
    probs, _ = classifier_forward(model, seq, f_gait, f_gesture, feature_mode)
    return int(probs[1] > probs[0])


# ---------------------------------------------------------------------------
# Checkpoint format: magic "LWLK", version, config JSON, named float64 records,
# trailing SHA-256 of all preceding bytes.
# ---------------------------------------------------------------------------

_MAGIC = b"LWLK"
_VERSION = 1


def _config_blob(model: Model) -> bytes:
    cfg = asdict(model.config)
    blob = {
        "config": cfg,
        "extra": model.extra_config,
        "has_norm_stats": model.norm_stats is not None,
    }
    return json.dumps(blob, sort_keys=True).encode("utf-8")


def save_checkpoint(model: Model, path: str | Path) -> None:
    chunks = [_MAGIC, struct.pack("<I", _VERSION)]
    blob = _config_blob(model)
    chunks.append(struct.pack("<I", len(blob)))
    chunks.append(blob)
    records = []
    if model.norm_stats is not None:
        records.append(("norm.mins", model.norm_stats.mins))
        records.append(("norm.maxs", model.norm_stats.maxs))
    records.extend((name, model.params[name].data) for name in sorted(model.params))
    chunks.append(struct.pack("<I", len(records)))
    for name, arr in records:
        nb = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    payload = b"".join(chunks)
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(payload + digest)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataFormatError("truncated checkpoint file")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path: str | Path, expect_config: Optional[ModelConfig] = None) -> Model:
    raw = Path(path).read_bytes()
    if len(raw) < 4 + 32 or raw[:4] != _MAGIC:
        raise DataFormatError(f"{path}: not a liarwalk checkpoint (bad magic)")
    payload, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise DataFormatError(f"{path}: checksum failure")
    r = _Reader(payload)
    r.take(4)
    version = r.u32()
    if version != _VERSION:
        raise DataFormatError(f"{path}: unsupported checkpoint version {version}")
    blob = json.loads(r.take(r.u32()).decode("utf-8"))
    cfg_dict = blob["config"]
    for key in ("hidden_sizes", "fc_sizes", "concat_order"):
        cfg_dict[key] = tuple(cfg_dict[key])
    config = ModelConfig(**cfg_dict)
    if expect_config is not None and config != expect_config:
        raise DataFormatError(
            f"{path}: checkpoint config mismatch (stored t_frames={config.t_frames}, "
            f"expected t_frames={expect_config.t_frames})"
        )
    arrays: dict[str, np.ndarray] = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8")
        ndim = r.u32()
        shape = struct.unpack(f"<{ndim}Q", r.take(8 * ndim))
        n = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(r.take(8 * n), dtype="<f8").reshape(shape).copy()
    norm_stats = None
    if blob["has_norm_stats"]:
        norm_stats = NormStats(mins=arrays.pop("norm.mins"), maxs=arrays.pop("norm.maxs"))
    params = {
        name: Tensor(arr, requires_grad=True, name=name) for name, arr in arrays.items()
    }
    return Model(config=config, params=params, norm_stats=norm_stats, extra_config=blob["extra"])
