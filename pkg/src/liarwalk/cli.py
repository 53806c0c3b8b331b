"""Command-line entry point: synth, validate, augment, extract-features,
gesture-stats, train, eval, ablate, pca-scatter, grad-check.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numeric error.
Every artifact-producing run writes a <output>.config.json sidecar with the
resolved configuration and seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__, analysis, checks
from .augmentation import AugmentConfig, augment_dataset
from .errors import DataFormatError, DegenerateSequenceError, LiarwalkError, NumericError
from .gait_features import FEATURE_NAMES, gait_feature_vector
from .gesture_features import GESTURE_NAMES, encode_gestures, gesture_class_stats
from .network import FEATURE_MODES, load_checkpoint, save_checkpoint
from .pose_data import Dataset, parse_dataset, similarity_normalize, write_dataset
from .synthetic import (
    ClassConfig,
    WalkParams,
    generate_dataset,
    null_class_configs,
    separable_class_configs,
)
from .training import SplitSpec, TrainConfig, evaluate, split_dataset, train

log = logging.getLogger("liarwalk")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _write_sidecar(out_path: str | Path, command: str, config: dict) -> None:
    sidecar = Path(str(out_path) + ".config.json")
    payload = {"command": command, "version": __version__, "config": config}
    sidecar.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")


def _split_file_path(out: str) -> Path:
    return Path(str(out) + ".split.json")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    mode = "separable"
    count = 100
    walks_per_subject = 4
    overrides: dict = {}
    if args.config:
        with open(args.config, "rb") as fh:
            raw = tomllib.load(fh)
        mode = raw.get("mode", mode)
        count = raw.get("count_per_class", count)
        walks_per_subject = raw.get("walks_per_subject", walks_per_subject)
        overrides = {k: raw[k] for k in ("natural", "deceptive") if k in raw}
    if args.count_per_class is not None:
        count = args.count_per_class
    if args.mode is not None:
        mode = args.mode
    if mode == "separable":
        configs = separable_class_configs()
    elif mode == "null":
        configs = null_class_configs()
    else:
        raise DataFormatError(f"unknown synth mode: {mode!r}")
    configs = list(configs)
    for i, name in enumerate(("natural", "deceptive")):
        if name in overrides:
            o = dict(overrides[name])
            gestures = o.pop("gestures", None)
            walk_fields = {k: v for k, v in o.items() if hasattr(WalkParams(), k)}
            unknown = set(o) - set(walk_fields)
            if unknown:
                raise DataFormatError(f"unknown walk parameter(s) in [{name}]: {sorted(unknown)}")
            walk = replace(configs[i].walk, **walk_fields)
            probs = dict(configs[i].gesture_probs)
            if gestures:
                probs.update({k: tuple(v) if isinstance(v, list) else v for k, v in gestures.items()})
            configs[i] = ClassConfig(walk=walk, gesture_probs=probs)
    ds = generate_dataset(tuple(configs), count, args.seed, walks_per_subject)
    write_dataset(ds, args.out)
    _write_sidecar(args.out, "synth", {
        "mode": mode, "count_per_class": count, "seed": args.seed,
        "walks_per_subject": walks_per_subject, "config_file": args.config,
    })
    print(f"wrote {len(ds)} data points to {args.out}")
    return 0


def cmd_validate(args) -> int:
    ds = parse_dataset(args.data)
    labels = ds.labels()
    subjects = {pt.sequence.subject_id for pt in ds.points}
    print(f"{args.data}: {len(ds)} points, {int((labels == 0).sum())} natural, "
          f"{int((labels == 1).sum())} deceptive, {len(subjects)} subjects")
    return 0


def cmd_augment(args) -> int:
    ds = parse_dataset(args.data)
    shifts = [int(s) for s in args.shifts.split(",")] if args.shifts else []
    out = augment_dataset(ds, AugmentConfig(reflect=args.reflect, shifts=shifts))
    write_dataset(out, args.out)
    _write_sidecar(args.out, "augment", {
        "data": args.data, "reflect": args.reflect, "shifts": shifts,
    })
    print(f"augmented {len(ds)} -> {len(out)} points")
    return 0


def _open_out(path):
    return open(path, "w", newline="", encoding="utf-8") if path else sys.stdout


def cmd_extract_features(args) -> int:
    ds = parse_dataset(args.data)
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["id", "label", *FEATURE_NAMES, *GESTURE_NAMES])
        for pt in ds.points:
            seq = similarity_normalize(pt.sequence)
            feats = gait_feature_vector(seq)
            gest = encode_gestures(pt.gestures)
            w.writerow([pt.sequence.id, pt.label]
                       + [f"{v:.12g}" for v in feats]
                       + [f"{v:g}" for v in gest])
    finally:
        if args.out:
            fh.close()
            _write_sidecar(args.out, "extract-features", {"data": args.data})
    return 0


def cmd_gesture_stats(args) -> int:
    ds = parse_dataset(args.data)
    stats = gesture_class_stats(ds)
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["label", "gesture", "percentage"])
        for label, row in stats.items():
            for gesture, pct in row.items():
                w.writerow([label, gesture, f"{pct:.6g}"])
    finally:
        if args.out:
            fh.close()
            _write_sidecar(args.out, "gesture-stats", {"data": args.data})
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr0=args.lr,
        weight_decay=args.weight_decay,
        t_frames=args.t_frames,
        seed=args.seed,
        feature_mode=args.feature_mode,
    )


_SPLIT_MODES = {"random": "random", "subject": "subject_independent", "kfold": "kfold"}


def cmd_train(args) -> int:
    ds = parse_dataset(args.data)
    cfg = _train_config(args)
    spec = SplitSpec(mode=_SPLIT_MODES[args.split], seed=args.seed)
    if args.split == "kfold":
        folds = split_dataset(ds, spec)
        accs = []
        model = history = None
        for i, (fold_train, fold_test) in enumerate(folds):
            tr, va, _ = split_dataset(
                fold_train, SplitSpec(mode="random", ratios=(0.9, 0.1, 0.0), seed=args.seed)
            )
            fold_model, fold_history = train(tr, va, cfg)
            m = evaluate(fold_model, fold_test, cfg.feature_mode)
            accs.append(m.accuracy)
            print(f"fold {i}: accuracy {m.accuracy:.4f}")
            if model is None:
                model, history = fold_model, fold_history
        print(f"kfold mean accuracy: {float(np.mean(accs)):.4f}")
        splits_record = {"mode": "kfold", "k": spec.k}
    else:
        tr, va, te = split_dataset(ds, spec)
        model, history = train(tr, va, cfg)
        m = evaluate(model, te, cfg.feature_mode)
        print(f"test accuracy: {m.accuracy:.4f}")
        splits_record = {
            "mode": args.split,
            "train": [pt.sequence.id for pt in tr.points],
            "val": [pt.sequence.id for pt in va.points],
            "test": [pt.sequence.id for pt in te.points],
        }
    save_checkpoint(model, args.out)
    _split_file_path(args.out).write_text(json.dumps(splits_record) + "\n")
    if args.history:
        with open(args.history, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["epoch", "lr", "train_loss", "val_accuracy"])
            w.writeheader()
            w.writerows(history)
    _write_sidecar(args.out, "train", {**cfg.__dict__, "data": args.data, "split": args.split})
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.model)
    ds = parse_dataset(args.data)
    if args.split_file:
        record = json.loads(Path(args.split_file).read_text())
        wanted = set(record.get("test", []))
        points = [pt for pt in ds.points if pt.sequence.id in wanted]
        if not points:
            raise DataFormatError("split file selects no points from the dataset")
        ds = Dataset(points=points)
    mode = args.feature_mode or model.extra_config.get("feature_mode", "all")
    m = evaluate(model, ds, mode)
    print(f"accuracy: {m.accuracy:.4f}")
    print(f"confusion [true x pred]:\n{m.confusion}")
    for c in (0, 1):
        print(f"class {c}: precision {m.precision[c]:.4f} recall {m.recall[c]:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps({
            "accuracy": m.accuracy,
            "confusion": m.confusion.tolist(),
            "precision": m.precision,
            "recall": m.recall,
        }, indent=2) + "\n")
        _write_sidecar(args.out, "eval", {
            "model": args.model, "data": args.data,
            "split_file": args.split_file, "feature_mode": mode,
        })
    return 0


def cmd_ablate(args) -> int:
    from .training import ablation_run

    ds = parse_dataset(args.data)
    cfg = _train_config(args)
    spec = SplitSpec(mode=_SPLIT_MODES[args.split], seed=args.seed)
    tr, va, te = split_dataset(ds, spec)
    rows = ablation_run(tr, va, te, cfg)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["mode", "accuracy"])
        w.writeheader()
        w.writerows(rows)
    _write_sidecar(args.out, "ablate", {**cfg.__dict__, "data": args.data, "split": args.split})
    for row in rows:
        print(f"{row['mode']}: {row['accuracy']:.4f}")
    return 0


def cmd_pca_scatter(args) -> int:
    ds = parse_dataset(args.data)
    model = load_checkpoint(args.model) if args.model else None
    if args.which == "deep" and model is None:
        raise DataFormatError("--model is required for the 'deep' feature set")
    analysis.export_scatter(ds, args.which, args.out, model=model)
    _write_sidecar(args.out, "pca-scatter", {
        "data": args.data, "which": args.which, "model": args.model,
    })
    print(f"wrote {len(ds)} scatter rows to {args.out}")
    return 0


def cmd_grad_check(args) -> int:
    failed = False
    for name, report in checks.primitive_grad_checks(seed=args.seed).items():
        status = "ok" if report.passed else "FAIL"
        print(f"{name:>24}: max rel error {report.max_rel_error:.3e}  [{status}]")
        failed |= not report.passed
    report = checks.full_model_grad_check(seed=args.seed)
    status = "ok" if report.passed else "FAIL"
    print(f"{'full reduced model':>24}: max rel error {report.max_rel_error:.3e}  [{status}]")
    failed |= not report.passed
    if failed:
        raise NumericError("gradient check failed")
    return 0


# ---------------------------------------------------------------------------
# Argument grammar
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    p = _Parser(prog="liarwalk", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic two-class dataset")
    sp.add_argument("--config", help="TOML config (mode, counts, parameter overrides)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--count-per-class", type=int)
    sp.add_argument("--mode", choices=["separable", "null"])
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("validate", help="parse and validate a JSONL dataset")
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("augment", help="reflection / phase-shift augmentation")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--reflect", action="store_true")
    sp.add_argument("--shifts", default="", help="comma-separated frame offsets")
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("extract-features", help="emit the gait/gesture feature CSV")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_extract_features)

    sp = sub.add_parser("gesture-stats", help="per-class gesture presence percentages")
    sp.add_argument("--data", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gesture_stats)

    def add_train_flags(sp):
        sp.add_argument("--data", required=True)
        sp.add_argument("--split", choices=sorted(_SPLIT_MODES), default="random")
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--epochs", type=int, default=500)
        sp.add_argument("--batch-size", type=int, default=8)
        sp.add_argument("--lr", type=float, default=0.001)
        sp.add_argument("--weight-decay", type=float, default=1e-4)
        sp.add_argument("--t-frames", type=int, default=240)
        sp.add_argument("--feature-mode", choices=FEATURE_MODES, default="all")

    sp = sub.add_parser("train", help="train the deception classifier")
    add_train_flags(sp)
    sp.add_argument("--out", required=True, help="checkpoint path")
    sp.add_argument("--history", help="per-epoch history CSV")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--split-file", help="restrict to the 'test' ids of a split file")
    sp.add_argument("--feature-mode", choices=FEATURE_MODES)
    sp.add_argument("--out", help="metrics JSON")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("ablate", help="train/evaluate all five feature modes")
    add_train_flags(sp)
    sp.add_argument("--out", required=True, help="ablation CSV")
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("pca-scatter", help="PCA scatter CSV for a feature set")
    sp.add_argument("--data", required=True)
    sp.add_argument("--which", choices=analysis.SCATTER_FEATURE_SETS, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--model")
    sp.set_defaults(func=cmd_pca_scatter)

    sp = sub.add_parser("grad-check", help="finite-difference gradient checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_grad_check)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DataFormatError, DegenerateSequenceError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3
    except LiarwalkError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
