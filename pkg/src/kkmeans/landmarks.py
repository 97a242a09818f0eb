"""Landmark dictionary construction and numerical certification.

Two samplers are provided: uniform with replacement, and sampling
proportional to ridge leverage scores. Both come with the matching size
formulas (capped at n, where the theoretical constants are loose anyway).

Certification checks the operator inequality that makes a dictionary useful:
the projection deficit onto the landmark span must be dominated by a
ridge-regularized inverse of the data covariance,

    P_n - P_m  <=  gamma / (1 - epsilon) * (Phi Phi^T + gamma P_n)^(-1),

where P_n / P_m are the orthogonal projections onto the spans of the dataset
and of the landmarks. Everything is evaluated in Gram form: conjugating by
the data map turns the left side into ``K_n - K_nm K_mm^+ K_mn`` and the
right side into ``K_n (K_n + gamma I)^(-1)``, which is an exact restatement
on the span of the data (both sides vanish off it, since the landmarks are
dataset points). No feature-space objects are ever materialized, so the
check runs for any kernel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DegenerateMatrixError, InvalidArgumentError
from .kernels import gram_values

CERT_TOL = 1e-8
_RANK_RTOL = 1e-12


@dataclass(frozen=True)
class Dictionary:
    """Ordered multiset of landmark indices with sampler provenance."""

    indices: np.ndarray
    sampler: str = "explicit"
    gamma: float | None = None
    epsilon: float | None = None
    delta: float | None = None
    seed: int | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size < 1:
            raise InvalidArgumentError("a dictionary needs at least one index")
        if idx.min() < 0:
            raise InvalidArgumentError("landmark indices must be nonnegative")
        if self.sampler not in ("uniform", "rls", "explicit"):
            raise InvalidArgumentError(f"unknown sampler tag {self.sampler!r}")
        object.__setattr__(self, "indices", idx)

    @property
    def m(self) -> int:
        return self.indices.shape[0]

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["indices"] = self.indices.tolist()
        return d

    @classmethod
    def from_json_dict(cls, payload: dict) -> "Dictionary":
        return cls(
            indices=np.asarray(payload["indices"], dtype=np.int64),
            sampler=payload.get("sampler", "explicit"),
            gamma=payload.get("gamma"),
            epsilon=payload.get("epsilon"),
            delta=payload.get("delta"),
            seed=payload.get("seed"),
        )


@dataclass(frozen=True)
class LeverageScores:
    """Ridge leverage scores tau_i(gamma) and their sum, the effective dimension."""

    gamma: float
    tau: np.ndarray
    d_eff: float

    @property
    def n(self) -> int:
        return self.tau.shape[0]


@dataclass(frozen=True)
class CertificationReport:
    """Outcome of the projection-deficit certificate (plus optional sandwich check).

    ``slack`` is the smallest eigenvalue of the certificate matrix normalized
    by lambda_max of the full Gram matrix; the certificate passes when it is
    no smaller than -1e-8.
    """

    gamma: float
    epsilon: float
    passed: bool
    slack: float
    sandwich_passed: bool | None = None
    sandwich_norm: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _validate_params(gamma: float, epsilon: float | None, delta: float | None) -> None:
    if not (math.isfinite(gamma) and gamma > 0):
        raise InvalidArgumentError("gamma must be positive")
    if epsilon is not None and not (0 < epsilon < 1):
        raise InvalidArgumentError("epsilon must lie in (0, 1)")
    if delta is not None and not (0 < delta < 1):
        raise InvalidArgumentError("delta must lie in (0, 1)")


def uniform_size(n: int, gamma: float, epsilon: float, delta: float, kappa_sq: float = 1.0) -> int:
    """Landmark count for uniform sampling: ceil(12 kappa^2 (n/gamma) ln(n/delta) / eps^2), capped at n.

    The cap is safe because m = n distinct points already span the whole
    dataset; the constant 12 is loose at desk scale.
    """
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    _validate_params(gamma, epsilon, delta)
    if kappa_sq <= 0:
        raise InvalidArgumentError("kappa_sq must be positive")
    raw = 12.0 * kappa_sq * (n / gamma) * math.log(n / delta) / (epsilon * epsilon)
    return min(n, max(1, math.ceil(raw)))


def rls_size(n: int, d_eff: float, epsilon: float, delta: float, kappa_sq: float = 1.0) -> int:
    """Landmark count for leverage-score sampling: ceil(12 kappa^2 d_eff ln(n/delta) / eps^2), capped at n."""
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    if d_eff <= 0:
        raise InvalidArgumentError("d_eff must be positive")
    _validate_params(1.0, epsilon, delta)
    if kappa_sq <= 0:
        raise InvalidArgumentError("kappa_sq must be positive")
    raw = 12.0 * kappa_sq * d_eff * math.log(n / delta) / (epsilon * epsilon)
    return min(n, max(1, math.ceil(raw)))


def sample_uniform(n: int, m: int, rng, **params) -> Dictionary:
    """Draw m landmark indices i.i.d. uniformly from [0, n), with replacement."""
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    if m < 1:
        raise InvalidArgumentError("m must be positive")
    rng = np.random.default_rng(rng)
    idx = rng.integers(0, n, size=int(m))
    return Dictionary(indices=idx, sampler="uniform", **params)


def rls_exact(K, gamma: float) -> LeverageScores:
    """Exact ridge leverage scores tau_i = [K (K + gamma I)^(-1)]_ii.

    Computed through the eigendecomposition of K (eigenvalues clipped at
    zero), so tau_i = sum_j V_ij^2 w_j / (w_j + gamma) and the effective
    dimension d_eff = sum_i tau_i = trace(K (K + gamma I)^(-1)).
    """
    vals = gram_values(K)
    if vals.shape[0] != vals.shape[1]:
        raise InvalidArgumentError("expected a square kernel matrix")
    _validate_params(gamma, None, None)
    w, v = _psd_eigh(vals)
    filt = w / (w + gamma)
    tau = np.einsum("ij,j,ij->i", v, filt, v)
    tau = np.clip(tau, 0.0, 1.0)
    return LeverageScores(gamma=float(gamma), tau=tau, d_eff=float(filt.sum()))


def effective_dimension(scores: LeverageScores) -> float:
    """Sum of the leverage scores; equals trace(K (K + gamma I)^(-1))."""
    return float(scores.tau.sum())


def sample_rls(
    scores: LeverageScores,
    epsilon: float,
    delta: float,
    kappa_sq: float,
    rng,
    m: int | None = None,
) -> Dictionary:
    """Draw landmarks i.i.d. proportionally to their leverage scores.

    The draw count defaults to rls_size(n, d_eff, ...); pass ``m`` to pin it
    (grid sweeps do).
    """
    _validate_params(1.0, epsilon, delta)
    total = float(scores.tau.sum())
    if total <= 0.0:
        raise InvalidArgumentError("all leverage scores are zero")
    n = scores.n
    count = rls_size(n, scores.d_eff, epsilon, delta, kappa_sq) if m is None else int(m)
    if count < 1:
        raise InvalidArgumentError("m must be positive")
    rng = np.random.default_rng(rng)
    idx = rng.choice(n, size=count, replace=True, p=scores.tau / total)
    return Dictionary(
        indices=idx,
        sampler="rls",
        gamma=scores.gamma,
        epsilon=float(epsilon),
        delta=float(delta),
    )


def _psd_eigh(vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """eigh of a symmetric PSD matrix; rejects asymmetry/indefiniteness, clips noise."""
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    asym = float(np.max(np.abs(vals - vals.T)))
    if asym > 1e-8 * max(1.0, scale):
        raise InvalidArgumentError(f"kernel matrix asymmetric by {asym:.3e}")
    w, v = np.linalg.eigh((vals + vals.T) / 2.0)
    lam_max = float(w[-1])
    if lam_max <= 0.0:
        raise DegenerateMatrixError("kernel matrix has no positive eigenvalue")
    if float(w[0]) < -1e-8 * lam_max:
        raise InvalidArgumentError("kernel matrix is not PSD within tolerance")
    return np.clip(w, 0.0, None), v


def projected_gram(K, indices) -> np.ndarray:
    """Gram matrix after projecting the data onto the landmark span.

    Returns K_nm K_mm^+ K_mn, built from a truncated eigendecomposition of
    the landmark block so the result is symmetric PSD by construction.
    """
    vals = gram_values(K)
    idx = np.asarray(getattr(indices, "indices", indices), dtype=np.int64)
    if idx.min() < 0 or idx.max() >= vals.shape[0]:
        raise InvalidArgumentError("landmark index out of range")
    knm = vals[:, idx]
    kmm = vals[np.ix_(idx, idx)]
    w, v = np.linalg.eigh((kmm + kmm.T) / 2.0)
    lam_max = float(w[-1])
    if lam_max <= 0.0:
        raise DegenerateMatrixError("landmark Gram block has no positive eigenvalue")
    keep = w > _RANK_RTOL * lam_max
    half = knm @ (v[:, keep] / np.sqrt(w[keep]))
    return half @ half.T


def certify_gamma_preserving(K, dictionary, gamma: float, epsilon: float) -> CertificationReport:
    """Certify the ridge-dominated projection deficit for a dictionary.

    Forms M = gamma/(1-epsilon) * K (K + gamma I)^(-1) - (K - K_nm K_mm^+ K_mn),
    symmetrizes it, and passes iff lambda_min(M) >= -1e-8 * lambda_max(K).
    """
    _validate_params(gamma, epsilon, None)
    vals = gram_values(K)
    if vals.shape[0] != vals.shape[1]:
        raise InvalidArgumentError("expected a square kernel matrix")
    w, v = _psd_eigh(vals)
    lam_max = float(w[-1])
    ridge = (v * (w / (w + gamma))) @ v.T
    deficit = vals - projected_gram(vals, dictionary)
    cert = gamma / (1.0 - epsilon) * ridge - deficit
    cert = (cert + cert.T) / 2.0
    lam_min = float(np.linalg.eigvalsh(cert)[0])
    slack = lam_min / lam_max
    return CertificationReport(
        gamma=float(gamma),
        epsilon=float(epsilon),
        passed=bool(slack >= -CERT_TOL),
        slack=slack,
    )


def certify_sandwich(K, dictionary, gamma: float) -> float:
    """Smallest epsilon_hat for which the two-sided subsampling bound holds.

    The bound compares the rescaled landmark covariance (n/m) Phi_m Phi_m^T
    against (1 +- eps) Phi_n Phi_n^T +- eps gamma P_n. In Gram form it reads

        -eps (K^2 + gamma K)  <=  K^2 - (n/m) K_nS K_Sn  <=  eps (K^2 + gamma K),

    restricted to the span of K (both sides vanish on its null space), so
    epsilon_hat is the largest generalized eigenvalue magnitude of
    (K^2 - (n/m) K_nS K_Sn, K^2 + gamma K). Sampled columns S keep their
    multiplicity.
    """
    _validate_params(gamma, None, None)
    vals = gram_values(K)
    if vals.shape[0] != vals.shape[1]:
        raise InvalidArgumentError("expected a square kernel matrix")
    idx = np.asarray(getattr(dictionary, "indices", dictionary), dtype=np.int64)
    n = vals.shape[0]
    m = idx.shape[0]
    if m < 1:
        raise InvalidArgumentError("dictionary is empty")
    if idx.min() < 0 or idx.max() >= n:
        raise InvalidArgumentError("landmark index out of range")
    w, v = _psd_eigh(vals)
    lam_max = float(w[-1])
    keep = w > _RANK_RTOL * lam_max
    if not np.any(keep):
        raise DegenerateMatrixError("K^2 + gamma K is singular within tolerance")
    wr = w[keep]
    vr = v[:, keep]
    kns = vals[:, idx]
    diff = vals @ vals - (n / m) * (kns @ kns.T)
    # Restrict to the span of K and scale by (w_i (w_i + gamma))^(-1/2) on
    # both sides: w from K itself, (w + gamma) from the ridge.
    projected = vr.T @ diff @ vr
    scale = 1.0 / np.sqrt(wr * (wr + gamma))
    scaled = projected * scale[:, None] * scale[None, :]
    scaled = (scaled + scaled.T) / 2.0
    return float(np.max(np.abs(np.linalg.eigvalsh(scaled))))


def certify(K, dictionary, gamma: float, epsilon: float) -> CertificationReport:
    """Run both certificates and merge them into one report."""
    report = certify_gamma_preserving(K, dictionary, gamma, epsilon)
    eps_hat = certify_sandwich(K, dictionary, gamma)
    return CertificationReport(
        gamma=report.gamma,
        epsilon=report.epsilon,
        passed=report.passed,
        slack=report.slack,
        sandwich_passed=bool(eps_hat <= epsilon),
        sandwich_norm=eps_hat,
    )
