"""PCA projection (cyclic Jacobi eigensolver) of gait/gesture/deep feature sets
to 3 dimensions, and export of plot-ready scatter CSVs."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataFormatError
from .gait_features import gait_feature_vector
from .gesture_features import encode_gestures
from .network import Model, lstm_forward, prepare_network_input
from .pose_data import Dataset, similarity_normalize

log = logging.getLogger(__name__)

SCATTER_FEATURE_SETS = ("gait", "gesture", "gait+gesture", "deep")


def jacobi_eigh(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    Returns (eigenvalues, eigenvectors-as-columns), unsorted."""
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DataFormatError(f"jacobi_eigh needs a square matrix, got {A.shape}")
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        # sum the off-diagonal entries directly: subtracting the diagonal from
        # the total cancels catastrophically once the matrix is nearly diagonal
        off = np.sqrt(2.0 * (A[iu] ** 2).sum())
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J and V <- V J for the (p, q) Givens rotation
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    return np.diag(A).copy(), V


@dataclass
class PcaFit:
    components: np.ndarray  # (k, D), orthonormal rows
    explained_variance: np.ndarray  # (k,)
    mean: np.ndarray  # (D,)


def pca_fit(X: np.ndarray, k: int) -> PcaFit:
    """Top-k principal components of X (N x D) via the covariance eigenproblem.
    Sign convention: the largest-magnitude entry of each component is positive."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise DataFormatError("pca_fit needs at least 2 rows")
    if not 1 <= k <= min(n - 1, d):
        raise DataFormatError(f"k={k} out of range for {n} x {d} data")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    vals, vecs = jacobi_eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = vals[order][:k]
    comps = vecs[:, order][:, :k].T.copy()
    if (vals < 1e-12).any():
        log.warning("pca_fit: %d retained component(s) are rank-deficient",
                    int((vals < 1e-12).sum()))
    for i in range(k):
        j = np.argmax(np.abs(comps[i]))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    return PcaFit(components=comps, explained_variance=np.maximum(vals, 0.0), mean=mean)


def pca_project(X: np.ndarray, fit: PcaFit) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != fit.mean.shape[0]:
        raise DataFormatError(
            f"dimension mismatch: data D={X.shape[1]}, fit D={fit.mean.shape[0]}"
        )
    return (X - fit.mean) @ fit.components.T


def deep_features(model: Model, ds: Dataset) -> np.ndarray:
    """The LSTM deep feature f_d for every point of a dataset."""
    out = np.empty((len(ds), model.config.deep_dim))
    layers = model.lstm_layers()
    for i, pt in enumerate(ds.points):
        x = prepare_network_input(model, similarity_normalize(pt.sequence))
        out[i] = lstm_forward(layers, x).data[0]
    return out


def feature_matrix(ds: Dataset, which: str, model: Optional[Model] = None) -> np.ndarray:
    if which == "gait":
        return np.stack(
            [gait_feature_vector(similarity_normalize(pt.sequence)) for pt in ds.points]
        )
    if which == "gesture":
        return np.stack([encode_gestures(pt.gestures) for pt in ds.points])
    if which == "gait+gesture":
        return np.concatenate(
            [feature_matrix(ds, "gait"), feature_matrix(ds, "gesture")], axis=1
        )
    if which == "deep":
        if model is None:
            raise DataFormatError("the 'deep' feature set requires a trained model")
        return deep_features(model, ds)
    raise DataFormatError(f"unknown feature selector: {which!r}")


def export_scatter(ds: Dataset, which: str, path: str | Path,
                   model: Optional[Model] = None, k: int = 3) -> PcaFit:
    """Write id,label,pc1..pck rows for the selected feature set projected with PCA."""
    X = feature_matrix(ds, which, model)
    fit = pca_fit(X, k)
    proj = pca_project(X, fit)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label"] + [f"pc{i + 1}" for i in range(k)])
        for pt, row in zip(ds.points, proj):
            w.writerow([pt.sequence.id, pt.label] + [f"{v:.12g}" for v in row])
    return fit
