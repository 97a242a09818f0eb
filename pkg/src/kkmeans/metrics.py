"""Clustering-quality metrics and run summaries."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .errors import InvalidArgumentError


def nmi(a, b) -> float:
    """Normalized mutual information between two labelings, in [0, 1].

    Uses natural-log entropies from the empirical contingency table and
    arithmetic-mean normalization I(A;B) / ((H(A)+H(B))/2). Returns 0 when
    both labelings are constant (0/0 convention).
    """
    av = np.asarray(a).ravel()
    bv = np.asarray(b).ravel()
    if av.shape != bv.shape or av.size < 1:
        raise InvalidArgumentError("labelings must be non-empty and equally long")
    n = av.size
    _, ai = np.unique(av, return_inverse=True)
    _, bi = np.unique(bv, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)
    pxy = table / n
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    nz = pxy > 0
    mi = float((pxy[nz] * np.log(pxy[nz] / np.outer(px, py)[nz])).sum())
    ha = float(-(px[px > 0] * np.log(px[px > 0])).sum())
    hb = float(-(py[py > 0] * np.log(py[py > 0])).sum())
    denom = (ha + hb) / 2.0
    if denom == 0.0:
        return 0.0
    return float(np.clip(mi / denom, 0.0, 1.0))


def summarize_runs(values, confidence: float = 0.95) -> tuple[float, float]:
    """Mean and t-distribution confidence half-width of repeated run values."""
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size < 2:
        raise InvalidArgumentError("need at least two values to summarize")
    if not (0.0 < confidence < 1.0):
        raise InvalidArgumentError("confidence must lie in (0, 1)")
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / np.sqrt(vals.size))
    quantile = float(stats.t.ppf((1.0 + confidence) / 2.0, vals.size - 1))
    return mean, quantile * sem
