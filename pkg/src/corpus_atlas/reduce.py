"""PCA dimensionality reduction with a cumulative explained-variance target.

The retained dimensionality is the smallest component count whose cumulative
explained-variance ratio reaches the target (default 0.95). Components are
computed by SVD of the centered data and sign-fixed so the largest-magnitude
coordinate of each component is positive, making fitted models reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedstore import EmbeddingMatrix


@dataclass
class PcaModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (m, d), orthonormal rows, decreasing variance
    explained_ratio: np.ndarray  # (m,), positive, non-increasing
    variance_target: float

    @property
    def m(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]


def _as_array(x) -> np.ndarray:
    if isinstance(x, EmbeddingMatrix):
        return np.asarray(x.data, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def fit(x, variance_target: float = 0.95) -> PcaModel:
    """Fit a PCA model on the rows of `x`.

    Parameters
    ----------
    x : EmbeddingMatrix or (n, d) array
        Observations in rows; n >= 2 required.
    variance_target : float in (0, 1]
        Cumulative explained-variance fraction to retain.

    Returns
    -------
    PcaModel with the smallest m whose cumulative ratio reaches the target.
    """
    if not 0.0 < variance_target <= 1.0:
        raise ValueError(f"variance_target must be in (0, 1], got {variance_target}")
    data = _as_array(x)
    if data.ndim != 2:
        raise ValueError(f"expected 2-D input, got shape {data.shape}")
    n, d = data.shape
    if n < 2 or d < 1:
        raise ValueError(f"need at least 2 rows and 1 column, got {n}x{d}")
    if not np.isfinite(data).all():
        raise ValueError("non-finite values in input")

    mean = data.mean(axis=0)
    centered = data - mean
    # SVD of the centered data is the numerically stable route to the
    # covariance eigendecomposition: eigenvalues are s^2/(n-1).
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    eigvals = (s * s) / (n - 1)
    total = eigvals.sum()
    if total <= 0.0:
        raise ValueError("zero-variance data: all rows identical")
    ratios = eigvals / total
    cumulative = np.cumsum(ratios)
    m = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    m = min(m, len(ratios))

    components = vt[:m].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(
        mean=mean,
        components=components,
        explained_ratio=ratios[:m].copy(),
        variance_target=float(variance_target),
    )


def transform(model: PcaModel, x):
    """Project rows of `x` onto the model's components; ids are preserved."""
    data = _as_array(x)
    if data.ndim != 2 or data.shape[1] != model.d:
        raise ValueError(
            f"dimension mismatch: input has {data.shape[-1] if data.ndim else 0} columns, "
            f"model expects {model.d}"
        )
    scores = (data - model.mean) @ model.components.T
    if isinstance(x, EmbeddingMatrix):
        return EmbeddingMatrix(data=scores, ids=list(x.ids), variant_tag=x.variant_tag)
    return scores


def explained_curve(model: PcaModel) -> np.ndarray:
    """Cumulative explained-variance ratio over the retained components."""
    return np.cumsum(model.explained_ratio)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_model(model: PcaModel, path: str | Path) -> None:
    """Serialize the model as JSON with 17-significant-digit decimal floats."""
    parts = [
        '{"variance_target":%s' % _fmt(model.variance_target),
        '"m":%d' % model.m,
        '"mean":[%s]' % ",".join(_fmt(v) for v in model.mean),
        '"explained_ratio":[%s]' % ",".join(_fmt(v) for v in model.explained_ratio),
        '"components":[%s]}'
        % ",".join("[%s]" % ",".join(_fmt(v) for v in row) for row in model.components),
    ]
    Path(path).write_text(",".join(parts), encoding="utf-8")


def load_model(path: str | Path) -> PcaModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return PcaModel(
        mean=np.asarray(obj["mean"], dtype=np.float64),
        components=np.asarray(obj["components"], dtype=np.float64),
        explained_ratio=np.asarray(obj["explained_ratio"], dtype=np.float64),
        variance_target=float(obj["variance_target"]),
    )
