"""Exact t-SNE projection to 2-D for qualitative views of an embedding.

Gaussian input affinities are calibrated per row by binary search so that
the conditional distribution's entropy matches log2(perplexity); the 2-D
layout minimizes KL(P||Q) against a Student-t (1 dof) kernel by momentum
gradient descent with early exaggeration. O(n^2) memory and time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_P_FLOOR = 1e-12
_ENTROPY_TOL = 1e-5  # bits
_MAX_BISECTIONS = 50


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    seed: int = 0

    def validate(self, n: int) -> None:
        if self.perplexity <= 0 or self.learning_rate <= 0 or self.early_exaggeration <= 0:
            raise ValueError("perplexity, learning_rate, early_exaggeration must be positive")
        if self.iterations < 250:
            raise ValueError(f"iterations must be >= 250, got {self.iterations}")
        if not self.perplexity < (n - 1) / 3:
            raise ValueError(
                f"perplexity {self.perplexity} too large for n={n} (needs perplexity < (n-1)/3)"
            )


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] - 2.0 * (x @ x.T) + sq[None, :]
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _row_entropy_bits(d2_row: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Entropy (bits) and probabilities of the conditional p_{j|i} at precision beta."""
    logits = -beta * d2_row
    logits -= logits.max()
    w = np.exp(logits)
    z = w.sum()
    p = w / z
    # H = sum p * (beta * d2 + log z - max-shift) in nats; use the shifted form directly
    h_nats = float(np.log(z) - (logits * p).sum())
    return h_nats / np.log(2.0), p


def calibrate_affinities(
    x: np.ndarray, perplexity: float = 30.0, return_conditional: bool = False
):
    """Symmetrized t-SNE affinity matrix P with per-row bandwidth calibration.

    Each row's Gaussian precision is bisected until the conditional entropy
    equals log2(perplexity) within 1e-5 bits (at most 50 steps); P is then
    symmetrized as (p_{j|i} + p_{i|j}) / (2n) and floored at 1e-12 off the
    diagonal. With `return_conditional` the raw conditional matrix p_{j|i}
    is returned alongside P for diagnostics.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise ValueError(f"need at least 4 rows, got {n}")
    if not perplexity < (n - 1) / 3:
        raise ValueError(
            f"perplexity {perplexity} too large for n={n} (needs perplexity < (n-1)/3)"
        )
    d2 = _pairwise_sq_dists(x)
    if not d2.any():
        raise ValueError("degenerate input: all rows identical")
    target = float(np.log2(perplexity))
    cond = np.zeros((n, n), dtype=np.float64)
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        row = d2[i][mask[i]]
        beta, lo, hi = 1.0, 0.0, np.inf
        h, p = _row_entropy_bits(row, beta)
        for _ in range(_MAX_BISECTIONS):
            if abs(h - target) <= _ENTROPY_TOL:
                break
            if h > target:  # too spread out: raise precision
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
            h, p = _row_entropy_bits(row, beta)
        cond[i][mask[i]] = p
    p_joint = (cond + cond.T) / (2.0 * n)
    np.clip(p_joint, _P_FLOOR, None, out=p_joint)
    np.fill_diagonal(p_joint, 0.0)
    if return_conditional:
        return p_joint, cond
    return p_joint


def kl_and_gradient(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P||Q) under the Student-t kernel and its analytic gradient.

    grad_i = 4 * sum_j (p_ij - q_ij) * (y_i - y_j) / (1 + ||y_i - y_j||^2)
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if p.shape != (n, n):
        raise ValueError(f"P shape {p.shape} does not match {n} output rows")
    w = 1.0 / (1.0 + _pairwise_sq_dists(y))
    np.fill_diagonal(w, 0.0)
    z = w.sum()
    q = w / z
    q_safe = np.maximum(q, np.finfo(np.float64).tiny)
    p_pos = p > 0.0
    kl = float(np.sum(p[p_pos] * (np.log(p[p_pos]) - np.log(q_safe[p_pos]))))
    pq_w = (p - q) * w
    grad = 4.0 * (pq_w.sum(axis=1)[:, None] * y - pq_w @ y)
    return kl, grad


def tsne(x: np.ndarray, config: TsneConfig | None = None, return_history: bool = False):
    """Project rows of `x` to 2-D. Deterministic for a given seed.

    Initial coordinates are seeded N(0, 1e-4) draws keyed by (seed, row
    index). The exaggeration factor applies for the first
    `exaggeration_iters` iterations, where the recorded KL history reflects
    the exaggerated objective; afterwards it is the true KL.
    """
    config = config or TsneConfig()
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise ValueError(f"need at least 4 rows, got {n}")
    config.validate(n)
    p = calibrate_affinities(x, config.perplexity)

    rng = np.random.default_rng(config.seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(y)
    history: list[float] = []
    for it in range(config.iterations):
        exaggerating = it < config.exaggeration_iters
        p_eff = p * config.early_exaggeration if exaggerating else p
        kl, grad = kl_and_gradient(p_eff, y)
        momentum = config.momentum_early if exaggerating else config.momentum_late
        update = momentum * update - config.learning_rate * grad
        y += update
        y -= y.mean(axis=0)
        history.append(kl)
    if return_history:
        return y, history
    return y
