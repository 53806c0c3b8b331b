"""Dataset splitting, the training loop (Adam, halving LR schedule, best-val
checkpointing), evaluation metrics, and the five-mode ablation harness."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataFormatError, NumericError
from .gait_features import gait_feature_vector
from .gesture_features import encode_gestures
from .network import (
    FEATURE_MODES,
    Model,
    ModelConfig,
    forward_batch,
    softmax,
)
from .numerics import AdamState, adam_step, softmax_cross_entropy
from .pose_data import (
    Dataset,
    condition_length,
    minmax_apply,
    minmax_fit,
    similarity_normalize,
)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

@dataclass
class SplitSpec:
    mode: str = "random"  # random | subject_independent | kfold
    ratios: tuple = (0.8, 0.1, 0.1)
    k: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("random", "subject_independent", "kfold"):
            raise DataFormatError(f"unknown split mode: {self.mode!r}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise DataFormatError(f"split ratios must sum to 1, got {self.ratios}")
        if self.k < 2:
            raise DataFormatError("kfold requires k >= 2")


def _base_id(seq_id: str) -> str:
    # augmented variants carry "#refl"/"#ps<k>" suffixes and must follow their source
    return seq_id.split("#", 1)[0]


def _group_points(ds: Dataset, key_fn) -> dict[str, list]:
    groups: dict[str, list] = {}
    for pt in ds.points:
        groups.setdefault(key_fn(pt), []).append(pt)
    return groups


def split_dataset(ds: Dataset, spec: SplitSpec):
    """Partition a dataset. Returns (train, val, test) Datasets for random and
    subject-independent modes, or a list of (train, test) pairs for kfold.
    Augmented variants always land on the same side as their source."""
    if not ds.points:
        raise DataFormatError("cannot split an empty dataset")
    rng = np.random.default_rng(spec.seed)

    if spec.mode == "subject_independent":
        groups = _group_points(ds, lambda pt: pt.sequence.subject_id)
        if len(groups) < 3:
            raise DataFormatError(
                f"subject-independent split needs >= 3 subjects, got {len(groups)}"
            )
        names = sorted(groups)
        rng.shuffle(names)
        # greedy by descending size into the partition with the largest deficit
        names.sort(key=lambda n: -len(groups[n]))
        total = len(ds)
        targets = [r * total for r in spec.ratios]
        fills = [0.0, 0.0, 0.0]
        parts: list[list] = [[], [], []]
        for name in names:
            deficits = [t - f for t, f in zip(targets, fills)]
            j = int(np.argmax(deficits))
            parts[j].extend(groups[name])
            fills[j] += len(groups[name])
        train, val, test = (Dataset(points=p) for p in parts)
        _check_nonempty(spec.ratios, train, val, test)
        return train, val, test

    groups = _group_points(ds, lambda pt: _base_id(pt.sequence.id))
    names = sorted(groups)
    rng.shuffle(names)

    if spec.mode == "kfold":
        folds: list[list] = [[] for _ in range(spec.k)]
        for i, name in enumerate(names):
            folds[i % spec.k].extend(groups[name])
        out = []
        for i in range(spec.k):
            test = Dataset(points=folds[i])
            train_pts = [pt for j in range(spec.k) if j != i for pt in folds[j]]
            out.append((Dataset(points=train_pts), test))
        return out

    total = len(ds)
    n_train = round(spec.ratios[0] * total)
    n_val = round((spec.ratios[0] + spec.ratios[1]) * total) - n_train
    parts = [[], [], []]
    count = 0
    for name in names:
        if count < n_train:
            parts[0].extend(groups[name])
        elif count < n_train + n_val:
            parts[1].extend(groups[name])
        else:
            parts[2].extend(groups[name])
        count += len(groups[name])
    train, val, test = (Dataset(points=p) for p in parts)
    _check_nonempty(spec.ratios, train, val, test)
    return train, val, test


def _check_nonempty(ratios, *splits: Dataset):
    for name, ratio, s in zip(("train", "val", "test"), ratios, splits):
        if ratio > 0 and not s.points:
            raise DataFormatError(f"{name} partition is empty after the cut")


def subjects_disjoint(*splits: Dataset) -> bool:
    seen: set[str] = set()
    for s in splits:
        subs = {pt.sequence.subject_id for pt in s.points}
        if subs & seen:
            return False
        seen |= subs
    return True


# ---------------------------------------------------------------------------
# Training configuration
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 8
    lr0: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 1e-4
    t_frames: int = 240
    seed: int = 0
    feature_mode: str = "all"

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise DataFormatError(f"unknown feature mode: {self.feature_mode!r}")
        for name in ("epochs", "batch_size", "lr0", "t_frames"):
            if getattr(self, name) <= 0:
                raise DataFormatError(f"{name} must be positive")

    @property
    def halving_epochs(self) -> tuple[int, ...]:
        n = self.epochs
        return tuple(sorted({n // 2, 3 * n // 4, 7 * n // 8}))

    def learning_rate(self, epoch: int) -> float:
        halvings = sum(1 for h in self.halving_epochs if h <= epoch)
        return self.lr0 * 2.0 ** (-halvings)


# ---------------------------------------------------------------------------
# Feature/input preparation
# ---------------------------------------------------------------------------

@dataclass
class PreparedSplit:
    ids: list[str]
    labels: np.ndarray  # (N,)
    gait: np.ndarray  # (N, 29)
    gesture: np.ndarray  # (N, 7)
    x: Optional[np.ndarray] = None  # (N, T, 48) network input, filled after minmax fit

    def __len__(self):
        return len(self.ids)


def prepare_split(ds: Dataset) -> tuple[PreparedSplit, list]:
    """Similarity-normalize every sequence and extract handcrafted features.
    Returns the prepared split plus the normalized sequences (for minmax)."""
    seqs = [similarity_normalize(pt.sequence) for pt in ds.points]
    gait = np.stack([gait_feature_vector(s) for s in seqs])
    gesture = np.stack([encode_gestures(pt.gestures) for pt in ds.points])
    prep = PreparedSplit(
        ids=[pt.sequence.id for pt in ds.points],
        labels=ds.labels(),
        gait=gait,
        gesture=gesture,
    )
    return prep, seqs


def _network_inputs(seqs, stats, t_frames: int) -> np.ndarray:
    out = np.empty((len(seqs), t_frames, 48))
    for i, s in enumerate(seqs):
        out[i] = minmax_apply(condition_length(s, t_frames), stats).frames.reshape(t_frames, 48)
    return out


@dataclass
class PreparedData:
    train: PreparedSplit
    val: PreparedSplit
    test: Optional[PreparedSplit]
    norm_stats: object


def prepare_splits(train: Dataset, val: Dataset, test: Optional[Dataset], t_frames: int) -> PreparedData:
    tr, tr_seqs = prepare_split(train)
    va, va_seqs = prepare_split(val)
    stats = minmax_fit(tr_seqs)
    tr.x = _network_inputs(tr_seqs, stats, t_frames)
    va.x = _network_inputs(va_seqs, stats, t_frames)
    te = None
    if test is not None:
        te, te_seqs = prepare_split(test)
        te.x = _network_inputs(te_seqs, stats, t_frames)
    return PreparedData(train=tr, val=va, test=te, norm_stats=stats)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _predict_batched(model: Model, split: PreparedSplit, feature_mode: str,
                     batch: int = 64) -> np.ndarray:
    preds = np.empty(len(split), dtype=np.int64)
    need_x = feature_mode in ("deep", "all")
    for start in range(0, len(split), batch):
        sl = slice(start, start + batch)
        x = split.x[sl] if need_x else None
        logits = forward_batch(model, x, split.gait[sl], split.gesture[sl], feature_mode).data
        p = softmax(logits)
        preds[sl] = (p[:, 1] > p[:, 0]).astype(np.int64)  # exact ties -> 0
    return preds


def train_prepared(prep: PreparedData, cfg: TrainConfig,
                   model_config: Optional[ModelConfig] = None) -> tuple[Model, list[dict]]:
    """Train on pre-extracted splits; returns the best-validation-accuracy model
    (earliest epoch on ties) and the per-epoch history."""
    if model_config is None:
        model_config = ModelConfig(t_frames=cfg.t_frames, seed=cfg.seed)
    model = Model.create(model_config)
    model.norm_stats = prep.norm_stats
    model.extra_config = {
        "feature_mode": cfg.feature_mode,
        "seed": cfg.seed,
        "epochs": cfg.epochs,
        "beta2": cfg.beta2,
        "adam_eps": 1e-8,
    }
    params = model.param_list()
    state = AdamState.for_params(params, beta1=cfg.beta1, beta2=cfg.beta2)
    n = len(prep.train)
    need_x = cfg.feature_mode in ("deep", "all")

    history: list[dict] = []
    best_acc, best_epoch, best_params = -1.0, -1, None
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.learning_rate(epoch)
        order = np.random.default_rng((cfg.seed, epoch)).permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            x = prep.train.x[idx] if need_x else None
            for p in params:
                p.zero_grad()
            logits = forward_batch(
                model, x, prep.train.gait[idx], prep.train.gesture[idx], cfg.feature_mode
            )
            loss, _ = softmax_cross_entropy(logits, prep.train.labels[idx])
            if not np.isfinite(loss.data):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}"
                )
            loss.backward()
            grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
            adam_step(params, grads, state, lr, cfg.weight_decay)
            losses.append(float(loss.data))
        val_preds = _predict_batched(model, prep.val, cfg.feature_mode)
        val_acc = float((val_preds == prep.val.labels).mean())
        history.append(
            {"epoch": epoch, "lr": lr, "train_loss": float(np.mean(losses)),
             "val_accuracy": val_acc}
        )
        if val_acc > best_acc:
            best_acc, best_epoch = val_acc, epoch
            best_params = {k: v.data.copy() for k, v in model.params.items()}
        log.debug("epoch %d lr %.6f loss %.4f val %.3f", epoch, lr, history[-1]["train_loss"], val_acc)
    if best_params is not None:
        for k, v in best_params.items():
            model.params[k].data = v
    model.extra_config["best_epoch"] = best_epoch
    return model, history


def train(train_ds: Dataset, val_ds: Dataset, cfg: TrainConfig,
          model_config: Optional[ModelConfig] = None) -> tuple[Model, list[dict]]:
    prep = prepare_splits(train_ds, val_ds, None, cfg.t_frames)
    return train_prepared(prep, cfg, model_config)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass
class Metrics:
    accuracy: float
    confusion: np.ndarray  # [true][pred]
    precision: dict[int, float] = field(default_factory=dict)
    recall: dict[int, float] = field(default_factory=dict)


def metrics_from_predictions(labels: np.ndarray, preds: np.ndarray) -> Metrics:
    confusion = np.zeros((2, 2), dtype=np.int64)
    for t, p in zip(labels, preds):
        confusion[t, p] += 1
    precision, recall = {}, {}
    for c in (0, 1):
        pred_c = confusion[:, c].sum()
        true_c = confusion[c, :].sum()
        precision[c] = float(confusion[c, c] / pred_c) if pred_c else 0.0
        recall[c] = float(confusion[c, c] / true_c) if true_c else 0.0
    return Metrics(
        accuracy=float((labels == preds).mean()),
        confusion=confusion,
        precision=precision,
        recall=recall,
    )


def evaluate_prepared(model: Model, split: PreparedSplit, feature_mode: str = "all") -> Metrics:
    if not len(split):
        raise DataFormatError("cannot evaluate an empty split")
    preds = _predict_batched(model, split, feature_mode)
    return metrics_from_predictions(split.labels, preds)


def evaluate(model: Model, ds: Dataset, feature_mode: str = "all") -> Metrics:
    """Evaluate on a raw dataset using the model's fitted normalization stats."""
    if model.norm_stats is None:
        raise DataFormatError("model has no fitted norm stats")
    prep, seqs = prepare_split(ds)
    prep.x = _network_inputs(seqs, model.norm_stats, model.config.t_frames)
    return evaluate_prepared(model, prep, feature_mode)


# ---------------------------------------------------------------------------
# Ablation harness
# ---------------------------------------------------------------------------

def ablation_run(train_ds: Dataset, val_ds: Dataset, test_ds: Dataset,
                 cfg: TrainConfig) -> list[dict]:
    """Train and evaluate one model per feature mode; returns one row per mode."""
    prep = prepare_splits(train_ds, val_ds, test_ds, cfg.t_frames)
    rows = []
    for mode in FEATURE_MODES:
        mode_cfg = TrainConfig(**{**cfg.__dict__, "feature_mode": mode})
        model, _ = train_prepared(prep, mode_cfg)
        m = evaluate_prepared(model, prep.test, mode)
        rows.append({"mode": mode, "accuracy": m.accuracy})
        log.info("ablation %s: accuracy %.4f", mode, m.accuracy)
    return rows
