"""Shared test helpers: independent oracles and tiny data builders."""

from __future__ import annotations

import numpy as np
import pytest

from corpus_atlas.corpus import Corpus, PaperRecord


def make_corpus(entries: list[tuple[str, list[str]]], abstract: str = "w " * 40) -> Corpus:
    """Corpus from (id, categories) pairs; abstracts are filler."""
    records = [
        PaperRecord(id=rid, abstract=abstract.strip(), categories=tuple(cats),
                    word_count=len(abstract.split()))
        for rid, cats in entries
    ]
    counts: dict[str, int] = {}
    for r in records:
        for c in r.categories:
            counts[c] = counts.get(c, 0) + 1
    return Corpus(records=records, category_counts=counts, provenance={})


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected partition agreement, from the contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    assert a.shape == b.shape
    n = a.size
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(table.astype(np.float64)).sum()
    sum_rows = comb2(table.sum(axis=1).astype(np.float64)).sum()
    sum_cols = comb2(table.sum(axis=0).astype(np.float64)).sum()
    total = comb2(float(n))
    expected = sum_rows * sum_cols / total
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def silhouette_brute(x: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Direct per-sample evaluation of the silhouette definition."""
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    n = x.shape[0]
    uniq = np.unique(labels)
    s = np.zeros(n)
    for i in range(n):
        dists = np.sqrt(((x - x[i]) ** 2).sum(axis=1))
        same = (labels == labels[i])
        same[i] = False
        if not same.any():
            s[i] = 0.0
            continue
        a = dists[same].mean()
        b = min(dists[labels == c].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        s[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(s.mean()), s


def make_blobs(rng: np.random.Generator, centers: np.ndarray, per_blob: int,
               sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Spherical Gaussian blobs with planted labels."""
    centers = np.asarray(centers, dtype=np.float64)
    xs, ys = [], []
    for t, c in enumerate(centers):
        xs.append(c + rng.normal(0.0, sigma, size=(per_blob, centers.shape[1])))
        ys.append(np.full(per_blob, t))
    return np.vstack(xs), np.concatenate(ys)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
