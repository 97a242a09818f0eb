"""Kernel evaluation, Gram-matrix assembly, and the pairwise bandwidth heuristic."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBandwidthError, InvalidArgumentError

GAUSSIAN = "gaussian"
LINEAR = "linear"
_FAMILIES = (GAUSSIAN, LINEAR)

DEFAULT_MAX_PAIRS = 1_000_000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters.

    ``kappa_sq`` is an upper bound on k(x, x): exactly 1 for the gaussian
    family, and for the linear family it must dominate max ``|x_i|^2`` over
    the dataset it is paired with.
    """

    family: str
    sigma: float | None = None
    kappa_sq: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidArgumentError(f"unknown kernel family {self.family!r}")
        if self.family == GAUSSIAN:
            if self.sigma is None or not math.isfinite(self.sigma) or self.sigma <= 0:
                raise InvalidArgumentError("gaussian kernel requires sigma > 0")
            if self.kappa_sq != 1.0:
                raise InvalidArgumentError("gaussian kernel has kappa_sq = 1 by definition")
        else:
            if self.sigma is not None:
                raise InvalidArgumentError("linear kernel takes no bandwidth")
        if not math.isfinite(self.kappa_sq) or self.kappa_sq <= 0:
            raise InvalidArgumentError("kappa_sq must be positive and finite")

    @classmethod
    def gaussian(cls, sigma: float) -> "KernelSpec":
        return cls(GAUSSIAN, sigma=float(sigma), kappa_sq=1.0)

    @classmethod
    def linear_for(cls, points) -> "KernelSpec":
        """Linear kernel with kappa_sq set to the max squared norm of ``points``."""
        pts = as_points(points)
        bound = float(np.max(np.einsum("ij,ij->i", pts, pts)))
        return cls(LINEAR, kappa_sq=max(bound, np.finfo(float).tiny))


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of d-dimensional points with optional integer labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidArgumentError("points must be a non-empty n x d matrix")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("points must be finite")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (pts.shape[0],):
                raise InvalidArgumentError("labels must be one integer per point")
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class GramMatrix:
    """Kernel evaluations between two index sets of a dataset.

    ``row_ids`` / ``col_ids`` record which source rows each entry refers to;
    the matrix is square (and symmetric PSD) when the two id vectors agree.
    """

    values: np.ndarray
    row_ids: np.ndarray
    col_ids: np.ndarray

    @property
    def is_square(self) -> bool:
        return self.row_ids.shape == self.col_ids.shape and bool(
            np.all(self.row_ids == self.col_ids)
        )


def as_points(data) -> np.ndarray:
    """Coerce a Dataset or array-like to a finite float64 n x d matrix."""
    if isinstance(data, Dataset):
        return data.points
    pts = np.asarray(data, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise InvalidArgumentError("expected an n x d matrix of points")
    if not np.all(np.isfinite(pts)):
        raise InvalidArgumentError("points must be finite")
    return pts


def gram_values(K) -> np.ndarray:
    """Accept a GramMatrix or a plain ndarray and return the value matrix."""
    if isinstance(K, GramMatrix):
        return K.values
    vals = np.asarray(K, dtype=np.float64)
    if vals.ndim != 2:
        raise InvalidArgumentError("kernel matrix must be two-dimensional")
    return vals


def _kernel_row(spec: KernelSpec, x: np.ndarray, block: np.ndarray) -> np.ndarray:
    # Single code path shared by kernel_eval and gram, so their results agree
    # bit for bit.
    if spec.family == GAUSSIAN:
        sq = np.square(block - x).sum(axis=1)
        return np.exp(sq / (-2.0 * spec.sigma * spec.sigma))
    return (block * x).sum(axis=1)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of points."""
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    if xv.shape != yv.shape:
        raise InvalidArgumentError(f"dimension mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    if not (np.all(np.isfinite(xv)) and np.all(np.isfinite(yv))):
        raise InvalidArgumentError("kernel inputs must be finite")
    return float(_kernel_row(spec, xv, yv[None, :])[0])


def kernel_diag(spec: KernelSpec, points) -> np.ndarray:
    """k(x, x) for every row of ``points`` (closed form per family)."""
    pts = as_points(points)
    if spec.family == GAUSSIAN:
        return np.ones(pts.shape[0])
    return np.einsum("ij,ij->i", pts, pts)


def gram(
    spec: KernelSpec,
    rows,
    cols=None,
    *,
    row_ids=None,
    col_ids=None,
    n_workers: int = 1,
) -> GramMatrix:
    """Assemble the kernel matrix between two point sets.

    When ``cols`` is omitted the result is the square Gram matrix of ``rows``.
    Rows are partitioned across ``n_workers`` threads; each output row is
    computed independently, so the result does not depend on the worker count.
    """
    rpts = as_points(rows)
    cpts = rpts if cols is None else as_points(cols)
    if rpts.shape[1] != cpts.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: rows have d={rpts.shape[1]}, cols d={cpts.shape[1]}"
        )
    values = np.empty((rpts.shape[0], cpts.shape[0]))

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            values[i] = _kernel_row(spec, rpts[i], cpts)

    n = rpts.shape[0]
    workers = max(1, min(int(n_workers), n))
    if workers == 1:
        fill(0, n)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(fill, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            for f in futures:
                f.result()

    rid = np.arange(rpts.shape[0]) if row_ids is None else np.asarray(row_ids)
    if cols is None and col_ids is None:
        cid = rid
    else:
        cid = np.arange(cpts.shape[0]) if col_ids is None else np.asarray(col_ids)
    return GramMatrix(values=values, row_ids=rid, col_ids=cid)


def auto_bandwidth(data, max_pairs: int = DEFAULT_MAX_PAIRS, seed: int = 0) -> float:
    """Bandwidth heuristic sigma = (1/n^2) sqrt(sum over all ordered pairs of |x_i - x_j|^2).

    Exact when n^2 <= max_pairs, via the identity
    sum_{i,j} |x_i - x_j|^2 = 2n sum_i |x_i|^2 - 2 |sum_i x_i|^2.
    Otherwise the radicand is estimated from ``max_pairs`` ordered pairs drawn
    uniformly with replacement and rescaled by n^2/s, which leaves its
    expectation equal to the full double sum. Deterministic given ``seed``;
    the exact path ignores it.
    """
    pts = as_points(data)
    n = pts.shape[0]
    if n < 2:
        raise InvalidArgumentError("bandwidth heuristic needs at least two points")
    if max_pairs < 1:
        raise InvalidArgumentError("max_pairs must be positive")
    if np.all(pts == pts[0]):
        raise DegenerateBandwidthError("all points identical: sigma = 0")
    if n * n <= max_pairs:
        norms_sq = np.einsum("ij,ij->i", pts, pts)
        total = 2.0 * n * norms_sq.sum() - 2.0 * float(pts.sum(axis=0) @ pts.sum(axis=0))
    else:
        rng = np.random.default_rng(seed)
        s = int(max_pairs)
        left = rng.integers(0, n, size=s)
        right = rng.integers(0, n, size=s)
        mean_sq = np.square(pts[left] - pts[right]).sum(axis=1).mean()
        total = float(mean_sq) * n * n
    total = max(total, 0.0)
    sigma = math.sqrt(total) / (n * n)
    if sigma <= 0.0:
        raise DegenerateBandwidthError("pairwise distances vanish: sigma = 0")
    return sigma


def check_square_gram(K, kappa_sq: float | None = None) -> None:
    """Validate the square-Gram invariants: symmetry, bounded diagonal, PSD.

    Symmetry is required to 1e-12 absolute, the diagonal must not exceed
    kappa_sq + 1e-12 when a bound is given, and the spectrum must satisfy
    lambda_min >= -1e-8 * lambda_max.
    """
    vals = gram_values(K)
    if vals.shape[0] != vals.shape[1]:
        raise InvalidArgumentError("expected a square kernel matrix")
    asym = float(np.max(np.abs(vals - vals.T))) if vals.size else 0.0
    if asym > 1e-12:
        raise InvalidArgumentError(f"kernel matrix asymmetric by {asym:.3e}")
    if kappa_sq is not None and float(np.max(np.diagonal(vals))) > kappa_sq + 1e-12:
        raise InvalidArgumentError("diagonal exceeds the declared kappa_sq bound")
    eigs = np.linalg.eigvalsh((vals + vals.T) / 2.0)
    lam_max = float(eigs[-1])
    if lam_max > 0 and float(eigs[0]) < -1e-8 * lam_max:
        raise InvalidArgumentError("kernel matrix is not PSD within tolerance")
