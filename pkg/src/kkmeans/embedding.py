"""Finite-dimensional kernel embeddings built from a landmark dictionary.

The embedding of a point x is ``transform @ [k(landmark_j, x)]_j`` where
``transform = diag(lam)^(-1/2) U^T`` comes from the eigendecomposition of the
landmark Gram matrix. Inner products of embedded points reproduce the kernel
inner products after orthogonal projection onto the landmark span, so the
squared-norm deficit ``k(x, x) - |coords|^2`` is exactly the projection
residual of x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrixError, InvalidArgumentError
from .kernels import KernelSpec, as_points, gram, gram_values, kernel_diag

DEFAULT_RANK_TOL = 1e-10

ARTIFACT_MAGIC = "kkmeans-embedder"
ARTIFACT_VERSION = 1


@dataclass(frozen=True)
class Embedder:
    """Frozen landmark embedding: owns copies of the landmark rows.

    ``transform`` has shape (rank, m) and whitens the landmark Gram matrix:
    ``transform @ K_mm @ transform.T`` is the identity of size ``rank``.
    """

    landmark_points: np.ndarray
    transform: np.ndarray
    kept_eigenvalues: np.ndarray
    rank_tol: float
    kernel: KernelSpec

    @property
    def m(self) -> int:
        return self.landmark_points.shape[0]

    @property
    def rank(self) -> int:
        return self.kept_eigenvalues.shape[0]


@dataclass(frozen=True)
class EmbeddedSet:
    """Embedded coordinates plus per-point projection residuals.

    ``residuals[i] = k(x_i, x_i) - |coords_i|^2``, clamped at zero; the raw
    value can only dip below zero by floating-point noise.
    """

    coords: np.ndarray
    self_kernel: np.ndarray
    residuals: np.ndarray

    @property
    def n(self) -> int:
        return self.coords.shape[0]


def eig_psd(K, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose a symmetric PSD matrix, truncating the near-null space.

    Returns (U, lam) with orthonormal columns and eigenvalues in descending
    order; pairs with lam <= rank_tol * lam_max are dropped. Raises
    InvalidArgumentError for asymmetric or indefinite input and
    DegenerateMatrixError when no positive eigenvalue remains.
    """
    vals = gram_values(K)
    if vals.shape[0] != vals.shape[1]:
        raise InvalidArgumentError("expected a square matrix")
    if rank_tol < 0:
        raise InvalidArgumentError("rank_tol must be nonnegative")
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    asym = float(np.max(np.abs(vals - vals.T)))
    if asym > 1e-8 * max(1.0, scale):
        raise InvalidArgumentError(f"matrix asymmetric by {asym:.3e}")
    sym = (vals + vals.T) / 2.0
    w, u = np.linalg.eigh(sym)
    lam_max = float(w[-1])
    if lam_max <= 0.0:
        raise DegenerateMatrixError("matrix has no positive eigenvalue")
    if float(w[0]) < -1e-8 * lam_max:
        raise InvalidArgumentError("matrix is not PSD within tolerance")
    keep = w > rank_tol * lam_max
    w = w[keep][::-1]
    u = u[:, keep][:, ::-1]
    return np.ascontiguousarray(u), np.ascontiguousarray(w)


def build_embedder(
    data,
    dictionary,
    kernel: KernelSpec,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> Embedder:
    """Construct the embedding transform from a dictionary of landmark indices.

    ``dictionary`` may be a Dictionary from the landmark sampler or any
    integer index sequence (duplicates allowed; they land in the truncated
    null space rather than being deduplicated).
    """
    pts = as_points(data)
    indices = np.asarray(getattr(dictionary, "indices", dictionary), dtype=np.int64)
    if indices.ndim != 1 or indices.size < 1:
        raise InvalidArgumentError("dictionary must hold at least one landmark index")
    if indices.min() < 0 or indices.max() >= pts.shape[0]:
        raise InvalidArgumentError("landmark index out of range")
    landmarks = pts[indices].copy()
    kmm = gram(kernel, landmarks)
    u, lam = eig_psd(kmm.values, rank_tol)
    transform = u.T / np.sqrt(lam)[:, None]
    return Embedder(
        landmark_points=landmarks,
        transform=transform,
        kept_eigenvalues=lam,
        rank_tol=float(rank_tol),
        kernel=kernel,
    )


def embed(embedder: Embedder, pts, n_workers: int = 1) -> EmbeddedSet:
    """Map points to their embedded coordinates and projection residuals."""
    p = as_points(pts)
    if p.shape[1] != embedder.landmark_points.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: points have d={p.shape[1]}, "
            f"landmarks d={embedder.landmark_points.shape[1]}"
        )
    cross = gram(embedder.kernel, embedder.landmark_points, p, n_workers=n_workers)
    coords = np.ascontiguousarray((embedder.transform @ cross.values).T)
    self_k = kernel_diag(embedder.kernel, p)
    residuals = self_k - np.einsum("ij,ij->i", coords, coords)
    return EmbeddedSet(
        coords=coords,
        self_kernel=self_k,
        residuals=np.maximum(residuals, 0.0),
    )


def lift_centroids(embedder: Embedder, embedded_centroids) -> np.ndarray:
    """Express embedded centroids as coefficient rows over the landmarks.

    Row j of the result gives coefficients a with centroid_j = sum_s a[s] *
    phi(landmark_s) in kernel space; re-embedding the lifted centroid
    reproduces the embedded one.
    """
    cen = np.asarray(embedded_centroids, dtype=np.float64)
    if cen.ndim == 1:
        cen = cen[None, :]
    if cen.shape[1] != embedder.rank:
        raise InvalidArgumentError(
            f"centroids have {cen.shape[1]} coordinates, embedder rank is {embedder.rank}"
        )
    return cen @ embedder.transform


def embed_lifted(embedder: Embedder, coeffs) -> np.ndarray:
    """Embed kernel-space vectors given as landmark-coefficient rows.

    For v = sum_s a[s] phi(landmark_s) the embedding is transform @ K_mm @ a.
    """
    a = np.asarray(coeffs, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[1] != embedder.m:
        raise InvalidArgumentError("coefficient rows must have one entry per landmark")
    kmm = gram(embedder.kernel, embedder.landmark_points)
    return (embedder.transform @ kmm.values @ a.T).T


def save_embedder(embedder: Embedder, path) -> None:
    """Write the embedder to a versioned JSON artifact."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(embedder_to_dict(embedder), fh)


def embedder_to_dict(embedder: Embedder) -> dict:
    return {
        "magic": ARTIFACT_MAGIC,
        "version": ARTIFACT_VERSION,
        "kernel": {
            "family": embedder.kernel.family,
            "sigma": embedder.kernel.sigma,
            "kappa_sq": embedder.kernel.kappa_sq,
        },
        "rank_tol": embedder.rank_tol,
        "landmark_points": embedder.landmark_points.tolist(),
        "transform": embedder.transform.tolist(),
        "kept_eigenvalues": embedder.kept_eigenvalues.tolist(),
    }


def embedder_from_dict(payload: dict) -> Embedder:
    if payload.get("magic") != ARTIFACT_MAGIC:
        raise InvalidArgumentError("not an embedder artifact (bad magic header)")
    if payload.get("version") != ARTIFACT_VERSION:
        raise InvalidArgumentError(
            f"unsupported embedder artifact version {payload.get('version')!r}"
        )
    kernel = payload["kernel"]
    spec = KernelSpec(
        family=kernel["family"],
        sigma=kernel.get("sigma"),
        kappa_sq=kernel.get("kappa_sq", 1.0),
    )
    return Embedder(
        landmark_points=np.asarray(payload["landmark_points"], dtype=np.float64),
        transform=np.asarray(payload["transform"], dtype=np.float64),
        kept_eigenvalues=np.asarray(payload["kept_eigenvalues"], dtype=np.float64),
        rank_tol=float(payload["rank_tol"]),
        kernel=spec,
    )


def load_embedder(path) -> Embedder:
    with open(path, "r", encoding="utf-8") as fh:
        return embedder_from_dict(json.load(fh))
