#!/usr/bin/env python3
"""End-to-end demo: synthesize a dataset, train, evaluate, and export PCA plots.

All artifacts are written under the output directory (default ./demo_out):
  data.jsonl           synthetic walking sequences with gesture annotations
  data_aug.jsonl       reflection/phase-shift augmented training corpus
  model.ckpt           trained classifier checkpoint (+ .split.json sidecar)
  history.csv          per-epoch learning-rate / loss / validation accuracy
  metrics.json         held-out test metrics (accuracy, confusion, per-class)
  scatter_gait.csv     3-component PCA projection of the gait features
  scatter_deep.csv     3-component PCA projection of the learned embeddings
"""

import argparse
import sys
from pathlib import Path

from liarwalk.cli import main as cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("demo_out"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count-per-class", type=int, default=60)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--t-frames", type=int, default=60)
    ap.add_argument("--feature-mode", default="all")
    args = ap.parse_args()

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    data = out / "data.jsonl"
    aug = out / "data_aug.jsonl"
    ckpt = out / "model.ckpt"

    steps = [
        ["synth", "--out", str(data), "--seed", str(args.seed),
         "--count-per-class", str(args.count_per_class)],
        ["validate", "--data", str(data)],
        ["augment", "--data", str(data), "--out", str(aug),
         "--reflect", "--shifts", "8,16"],
        ["train", "--data", str(data), "--seed", str(args.seed),
         "--epochs", str(args.epochs), "--t-frames", str(args.t_frames),
         "--feature-mode", args.feature_mode,
         "--out", str(ckpt), "--history", str(out / "history.csv")],
        ["eval", "--model", str(ckpt), "--data", str(data),
         "--split-file", str(ckpt) + ".split.json",
         "--out", str(out / "metrics.json")],
        ["pca-scatter", "--data", str(data), "--which", "gait",
         "--out", str(out / "scatter_gait.csv")],
        ["pca-scatter", "--data", str(data), "--which", "deep",
         "--model", str(ckpt), "--out", str(out / "scatter_deep.csv")],
    ]
    for argv in steps:
        print(f"== liarwalk {' '.join(argv)}", flush=True)
        code = cli(argv)
        if code != 0:
            return code
    print(f"done; artifacts in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
