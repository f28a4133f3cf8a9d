"""K-Means with k-means++ seeding, Lloyd iterations, and seeded restarts.

Determinism contract: identical data and params give a bit-identical model.
Ties in the assignment step go to the lowest centroid index, and an empty
cluster is repaired by reseeding its centroid to the point currently farthest
from its own centroid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class KMeansParams:
    k: int
    seed: int = 0
    n_init: int = 10
    max_iter: int = 300
    rel_tol: float = 1e-4  # stop when relative WCSS improvement drops below this

    def validate(self, n: int) -> None:
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.k > n:
            raise ValueError(f"k={self.k} exceeds number of rows n={n}")
        if self.n_init < 1 or self.max_iter < 1 or self.rel_tol <= 0:
            raise ValueError("n_init, max_iter, rel_tol must all be positive")


@dataclass
class KMeansModel:
    centroids: np.ndarray  # (k, m)
    k: int
    wcss: float
    iterations: int  # Lloyd update steps of the winning restart
    seed: int
    n_init: int
    wcss_trace: list[float] = field(default_factory=list)  # winning restart, per iteration
    traces: list[list[float]] = field(default_factory=list)  # all restarts


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, (n, k)."""
    d2 = (
        np.einsum("ij,ij->i", x, x)[:, None]
        - 2.0 * (x @ c.T)
        + np.einsum("ij,ij->i", c, c)[None, :]
    )
    return np.maximum(d2, 0.0, out=d2)


def kmeanspp_init(x: np.ndarray, k: int, seed: int) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, then D^2-weighted draws."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds number of rows n={n}")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(x, x[chosen[-1]][None, :])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0.0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining mass on already-chosen (duplicate) points: fall
            # back to a uniform draw over the unchosen rows
            pool = np.setdiff1d(np.arange(n), np.asarray(chosen))
            idx = int(rng.choice(pool))
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(x, x[idx][None, :])[:, 0])
    return x[np.asarray(chosen, dtype=np.intp)].copy()


def _update_centroids(x: np.ndarray, labels: np.ndarray, k: int, prev: np.ndarray) -> np.ndarray:
    d = x.shape[1]
    out = np.empty((k, d), dtype=np.float64)
    counts = np.bincount(labels, minlength=k)
    for j in range(k):
        if counts[j]:
            out[j] = x[labels == j].mean(axis=0)
        else:
            out[j] = prev[j]  # placeholder until repaired below
    empties = np.flatnonzero(counts == 0)
    if empties.size:
        # reseed each empty centroid to the point farthest from its own centroid
        own = np.linalg.norm(x - out[labels], axis=1)
        for j in empties:
            far = int(np.argmax(own))
            out[j] = x[far]
            own[far] = 0.0  # a later empty cluster must pick a different point
    return out


def _lloyd(x: np.ndarray, init: np.ndarray, max_iter: int, rel_tol: float):
    """One restart. Returns (centroids, labels, wcss, updates, trace).

    The trace records, per iteration, the assignment-optimal WCSS of the
    current centroid set; it is non-increasing by construction.
    """
    c = init
    trace: list[float] = []
    prev: float | None = None
    labels = None
    cur = 0.0
    updates = 0
    while True:
        d2 = _sq_dists(x, c)
        labels = np.argmin(d2, axis=1)
        cur = float(d2[np.arange(x.shape[0]), labels].sum())
        trace.append(cur)
        if prev is not None and (prev == 0.0 or (prev - cur) <= rel_tol * prev):
            break
        if updates >= max_iter:
            break
        c = _update_centroids(x, labels, c.shape[0], c)
        updates += 1
        prev = cur
    return c, labels, cur, updates, trace


def fit(x: np.ndarray, params: KMeansParams) -> KMeansModel:
    """Best-of-n_init K-Means fit; restart i seeds k-means++ with seed+i."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected 2-D input, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite values in input")
    params.validate(x.shape[0])

    best = None
    traces: list[list[float]] = []
    for i in range(params.n_init):
        init = kmeanspp_init(x, params.k, params.seed + i)
        c, labels, wcss, updates, trace = _lloyd(x, init, params.max_iter, params.rel_tol)
        traces.append(trace)
        if best is None or wcss < best[2]:
            best = (c, labels, wcss, updates, trace)
    c, _, wcss, updates, trace = best
    return KMeansModel(
        centroids=c,
        k=params.k,
        wcss=wcss,
        iterations=updates,
        seed=params.seed,
        n_init=params.n_init,
        wcss_trace=trace,
        traces=traces,
    )


def predict(model: KMeansModel, x: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels (Euclidean); ties go to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.centroids.shape[1]:
        raise ValueError(
            f"dimension mismatch: input has {x.shape[-1] if x.ndim else 0} columns, "
            f"model expects {model.centroids.shape[1]}"
        )
    return np.argmin(_sq_dists(x, model.centroids), axis=1)


def wcss(model: KMeansModel, x: np.ndarray) -> float:
    """Sum of squared distances from each row to its nearest centroid."""
    x = np.asarray(x, dtype=np.float64)
    d2 = _sq_dists(x, model.centroids)
    return float(d2[np.arange(x.shape[0]), np.argmin(d2, axis=1)].sum())


def save_model(model: KMeansModel, path: str | Path) -> None:
    obj = {
        "k": model.k,
        "wcss": format(model.wcss, ".17g"),
        "iterations": model.iterations,
        "seed": model.seed,
        "n_init": model.n_init,
        "centroids": [[format(v, ".17g") for v in row] for row in model.centroids],
    }
    Path(path).write_text(json.dumps(obj, separators=(",", ":")), encoding="utf-8")


def load_model(path: str | Path) -> KMeansModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return KMeansModel(
        centroids=np.asarray([[float(v) for v in row] for row in obj["centroids"]]),
        k=int(obj["k"]),
        wcss=float(obj["wcss"]),
        iterations=int(obj["iterations"]),
        seed=int(obj["seed"]),
        n_init=int(obj["n_init"]),
    )
