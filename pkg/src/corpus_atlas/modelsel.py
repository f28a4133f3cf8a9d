"""Silhouette scoring and the k-sweep that selects the number of categories.

The sweep fits K-Means on training data for every candidate k, labels the
validation data by nearest centroid, and scores the labeled validation data
with the mean silhouette; the best k is the silhouette argmax (ties toward
smaller k). Training WCSS per k is recorded as an elbow diagnostic only.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cluster

log = logging.getLogger(__name__)

DEFAULT_K_VALUES = range(2, 51)
_CHUNK = 2048


@dataclass
class SweepResult:
    k_values: list[int]
    silhouette_val: list[float]
    wcss_train: list[float]
    best_k: int
    models: dict[int, cluster.KMeansModel] | None = None
    skipped: list[tuple[int, str]] = field(default_factory=list)


def silhouette(x: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean and per-sample silhouette scores under Euclidean distance.

    Per sample: a = mean distance to co-cluster members (excluding self),
    b = smallest mean distance to any other cluster, s = (b - a) / max(a, b).
    Samples in singleton clusters score 0 by convention.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 samples, got {n}")
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match {n} samples")
    uniq, inverse = np.unique(labels, return_inverse=True)
    if uniq.size < 2:
        raise ValueError("silhouette requires at least 2 distinct labels")

    members = [np.flatnonzero(inverse == c) for c in range(uniq.size)]
    sizes = np.asarray([m.size for m in members], dtype=np.float64)
    # dist_sums[i, c] = sum of Euclidean distances from sample i to cluster c
    dist_sums = np.empty((n, uniq.size), dtype=np.float64)
    x_sq = np.einsum("ij,ij->i", x, x)
    for c, idx in enumerate(members):
        acc = np.zeros(n, dtype=np.float64)
        for lo in range(0, idx.size, _CHUNK):
            block = idx[lo : lo + _CHUNK]
            d2 = x_sq[:, None] - 2.0 * (x @ x[block].T) + x_sq[block][None, :]
            np.maximum(d2, 0.0, out=d2)
            d = np.sqrt(d2)
            # the quadratic-form route leaves ~eps residue on self-pairs,
            # which sqrt inflates to ~1e-8; pin them to exactly zero
            d[block, np.arange(block.size)] = 0.0
            acc += d.sum(axis=1)
        dist_sums[:, c] = acc

    own = inverse
    own_size = sizes[own]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = dist_sums[np.arange(n), own] / (own_size - 1.0)
    mean_to = dist_sums / sizes[None, :]
    mean_to[np.arange(n), own] = np.inf
    b = mean_to.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = (b - a) / denom
    s = np.where((own_size == 1) | ~np.isfinite(s), 0.0, s)
    return float(s.mean()), s


def sweep(
    x_train: np.ndarray,
    x_val: np.ndarray,
    k_values=DEFAULT_K_VALUES,
    seed: int = 0,
    n_init: int = 10,
    max_iter: int = 300,
    rel_tol: float = 1e-4,
    subsample_cap: int = 10_000,
    keep_models: bool = False,
) -> SweepResult:
    """Fit per k on training data, silhouette-score predicted validation labels.

    Validation sets larger than `subsample_cap` are scored on one seeded
    subsample, drawn once and reused for every k. Candidates that cannot be
    evaluated (k above the training size, or a degenerate single-cluster
    validation labeling) are skipped with a warning.
    """
    x_train = np.asarray(x_train, dtype=np.float64)
    x_val = np.asarray(x_val, dtype=np.float64)
    if x_train.shape[1] != x_val.shape[1]:
        raise ValueError(
            f"train has {x_train.shape[1]} columns, validation has {x_val.shape[1]}"
        )
    sub = np.arange(x_val.shape[0])
    if x_val.shape[0] > subsample_cap:
        rng = np.random.default_rng(seed)
        sub = np.sort(rng.choice(x_val.shape[0], size=subsample_cap, replace=False))

    ks: list[int] = []
    sils: list[float] = []
    wcss_train: list[float] = []
    skipped: list[tuple[int, str]] = []
    models: dict[int, cluster.KMeansModel] = {}
    for k in k_values:
        if k > x_train.shape[0]:
            log.warning("sweep: skipping k=%d (exceeds %d training rows)", k, x_train.shape[0])
            skipped.append((k, "k exceeds training size"))
            continue
        model = cluster.fit(
            x_train,
            cluster.KMeansParams(k=k, seed=seed, n_init=n_init, max_iter=max_iter, rel_tol=rel_tol),
        )
        val_labels = cluster.predict(model, x_val)
        if np.unique(val_labels[sub]).size < 2:
            log.warning("sweep: skipping k=%d (validation collapsed to one cluster)", k)
            skipped.append((k, "validation labels collapsed to one cluster"))
            continue
        score, _ = silhouette(x_val[sub], val_labels[sub])
        ks.append(k)
        sils.append(score)
        wcss_train.append(model.wcss)
        if keep_models:
            models[k] = model
    if not ks:
        raise ValueError("no feasible k in sweep range")
    result = SweepResult(
        k_values=ks,
        silhouette_val=sils,
        wcss_train=wcss_train,
        best_k=0,
        models=models if keep_models else None,
        skipped=skipped,
    )
    result.best_k = select_best(result)
    return result


def select_best(result: SweepResult) -> int:
    """Silhouette argmax over the sweep; ties broken toward smaller k."""
    if not result.k_values:
        raise ValueError("empty sweep")
    best_k, best_s = None, -np.inf
    for k, s in zip(result.k_values, result.silhouette_val):
        if s > best_s or (s == best_s and (best_k is None or k < best_k)):
            best_k, best_s = k, s
    return best_k


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "silhouette_val", "wcss_train"])
        for k, s, wc in zip(result.k_values, result.silhouette_val, result.wcss_train):
            w.writerow([k, repr(s), repr(wc)])


def write_sweep_plot(result: SweepResult, path: str | Path) -> None:
    """Plot-data companion: silhouette against k with the best-k row marked."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "silhouette_val", "is_best"])
        for k, s in zip(result.k_values, result.silhouette_val):
            w.writerow([k, repr(s), 1 if k == result.best_k else 0])
