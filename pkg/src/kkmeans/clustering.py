"""k-means++ seeding, Lloyd iterations, and exact kernel-space cost oracles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import Embedder, embed
from .errors import InvalidArgumentError
from .kernels import as_points, gram_values

DEFAULT_MAX_ITER = 300
DEFAULT_MOVE_TOL = 1e-9

# Hard guard for the exhaustive partition search; beyond this the oracle
# refuses rather than silently truncating.
BRUTE_FORCE_MAX_N = 14
BRUTE_FORCE_MAX_K = 3


@dataclass(frozen=True)
class Partition:
    """Cluster labels in [0, k) for n points."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.ndim != 1 or lab.size < 1:
            raise InvalidArgumentError("labels must be a non-empty vector")
        if self.k < 1:
            raise InvalidArgumentError("k must be positive")
        if lab.min() < 0 or lab.max() >= self.k:
            raise InvalidArgumentError("label out of range")
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class ClusterModel:
    """Fitted centroids in embedded coordinates plus cost diagnostics.

    ``total_cost`` is the exact kernel-space cost of the model:
    the embedded cost plus the mean projection residual of the training set.
    """

    centroids: np.ndarray
    assignments: np.ndarray
    k: int
    iterations_run: int
    converged: bool
    embedded_cost: float
    residual_cost: float
    total_cost: float
    lifted: np.ndarray | None = None
    cost_history: tuple[float, ...] = field(default=())

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "lifted": None if self.lifted is None else self.lifted.tolist(),
            "assignments": self.assignments.tolist(),
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "embedded_cost": self.embedded_cost,
            "residual_cost": self.residual_cost,
            "total_cost": self.total_cost,
        }


def _sq_distances(coords: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # Exact expansion keeps distances nonnegative, which the tie-breaking
    # and monotonicity contracts rely on.
    return np.square(coords[:, None, :] - centroids[None, :, :]).sum(axis=2)


def _assign(coords: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # argmin returns the first minimizer, i.e. ties go to the lowest index.
    return np.argmin(_sq_distances(coords, centroids), axis=1)


def kmeanspp_seed(coords, k: int, rng) -> np.ndarray:
    """Squared-distance weighted seeding: first centroid uniform, each later
    one drawn with probability proportional to the squared distance to the
    nearest centroid chosen so far. Exact probabilities, no shortcut."""
    x = as_points(coords)
    n = x.shape[0]
    if k < 1:
        raise InvalidArgumentError("k must be positive")
    if k > n:
        raise InvalidArgumentError(f"k={k} exceeds the number of points n={n}")
    rng = np.random.default_rng(rng)
    centroids = np.empty((k, x.shape[1]))
    first = int(rng.integers(0, n))
    centroids[0] = x[first]
    chosen = np.zeros(n, dtype=bool)
    chosen[first] = True
    d2 = np.square(x - centroids[0]).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            pick = int(rng.choice(n, p=d2 / total))
        else:
            # All remaining mass sits on already-chosen locations (duplicate
            # points); fall back to a uniform draw over unchosen indices.
            pick = int(rng.choice(np.flatnonzero(~chosen)))
        centroids[j] = x[pick]
        chosen[pick] = True
        d2 = np.minimum(d2, np.square(x - centroids[j]).sum(axis=1))
    return centroids


def _update_centroids(
    x: np.ndarray, assign: np.ndarray, k: int, previous: np.ndarray
) -> np.ndarray:
    centroids = np.empty_like(previous)
    empty = []
    for j in range(k):
        members = np.flatnonzero(assign == j)
        if members.size:
            centroids[j] = x[members].mean(axis=0)
        else:
            empty.append(j)
            centroids[j] = previous[j]
    if empty:
        # Reseed each empty cluster at the point currently farthest from its
        # assigned centroid, excluding points already used for repair.
        d2 = np.square(x - centroids[assign]).sum(axis=1)
        for j in empty:
            far = int(np.argmax(d2))
            centroids[j] = x[far]
            d2[far] = -np.inf
    return centroids


def lloyd(
    coords,
    init_centroids,
    max_iter: int = DEFAULT_MAX_ITER,
    move_tol: float = DEFAULT_MOVE_TOL,
    residuals=None,
) -> ClusterModel:
    """Alternate nearest-centroid assignment and cluster-mean updates.

    Converged means a genuine fixed point: the assignment is stable and the
    centroid movement fell below ``move_tol``, so at exit each centroid is
    the mean of its members and each point sits in its nearest cluster.
    ``residuals`` (per-point projection residuals) only feed the cost
    bookkeeping: total_cost = embedded_cost + mean(residuals).
    """
    x = as_points(coords)
    centroids = np.array(init_centroids, dtype=np.float64)
    if centroids.ndim != 2 or centroids.shape[1] != x.shape[1]:
        raise InvalidArgumentError("init centroids must be k x d")
    if max_iter < 1:
        raise InvalidArgumentError("max_iter must be at least 1")
    k = centroids.shape[0]
    residual_cost = 0.0
    if residuals is not None:
        res = np.asarray(residuals, dtype=np.float64)
        if res.shape != (x.shape[0],):
            raise InvalidArgumentError("residuals must be one value per point")
        residual_cost = float(np.maximum(res, 0.0).mean())

    assign = _assign(x, centroids)
    history = [float(np.square(x - centroids[assign]).sum(axis=1).mean())]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_centroids = _update_centroids(x, assign, k, centroids)
        move = float(np.sqrt(np.square(new_centroids - centroids).sum(axis=1)).max())
        new_assign = _assign(x, new_centroids)
        centroids = new_centroids
        history.append(float(np.square(x - centroids[new_assign]).sum(axis=1).mean()))
        if move <= move_tol and np.array_equal(new_assign, assign):
            assign = new_assign
            converged = True
            break
        assign = new_assign

    embedded_cost = history[-1]
    return ClusterModel(
        centroids=centroids,
        assignments=assign,
        k=k,
        iterations_run=iterations,
        converged=converged,
        embedded_cost=embedded_cost,
        residual_cost=residual_cost,
        total_cost=embedded_cost + residual_cost,
        cost_history=tuple(history),
    )


def empirical_cost(coords, centroids) -> float:
    """Mean squared distance from each point to its nearest centroid."""
    x = as_points(coords)
    c = np.asarray(centroids, dtype=np.float64)
    if c.ndim == 1:
        c = c[None, :]
    if c.shape[1] != x.shape[1]:
        raise InvalidArgumentError("dimension mismatch between points and centroids")
    return float(_sq_distances(x, c).min(axis=1).mean())


def kernel_cost_exact(K, partition) -> float:
    """Exact kernel-space cost of a partition with per-cluster mean centroids.

    Expands (1/n) sum_j sum_{i in C_j} |phi_i - mean(C_j)|^2 through kernel
    evaluations only: each cluster contributes trace(K_C) - sum(K_C)/|C|.
    """
    vals = gram_values(K)
    if vals.shape[0] != vals.shape[1]:
        raise InvalidArgumentError("expected a square kernel matrix")
    labels = np.asarray(getattr(partition, "labels", partition), dtype=np.int64)
    n = vals.shape[0]
    if labels.shape != (n,):
        raise InvalidArgumentError("labels must have one entry per point")
    if labels.min() < 0:
        raise InvalidArgumentError("label out of range")
    k = getattr(partition, "k", None)
    if k is not None and labels.max() >= k:
        raise InvalidArgumentError("label out of range")
    total = 0.0
    for j in np.unique(labels):
        idx = np.flatnonzero(labels == j)
        block = vals[np.ix_(idx, idx)]
        total += float(np.trace(block)) - float(block.sum()) / idx.size
    return total / n


def lifted_cost_exact(self_kernel, cross, landmark_gram, coeffs) -> float:
    """Exact kernel-space cost of centroids given as landmark-coefficient rows.

    ``cross`` holds k(x_i, landmark_s) as an n x m matrix and ``coeffs`` the
    k x m coefficient rows; the per-point cost is
    k(x,x) - 2 cross_i . a_j + a_j K_mm a_j minimized over j. This is a pure
    Gram-side path, independent of any eigendecomposition, usable as an
    oracle against embedded costs.
    """
    sk = np.asarray(self_kernel, dtype=np.float64)
    cr = np.asarray(cross, dtype=np.float64)
    kmm = gram_values(landmark_gram)
    a = np.asarray(coeffs, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    if cr.shape != (sk.shape[0], kmm.shape[0]) or a.shape[1] != kmm.shape[0]:
        raise InvalidArgumentError("inconsistent shapes for lifted cost")
    cen_dot = cr @ a.T
    cen_norm = np.einsum("jm,ms,js->j", a, kmm, a)
    per_point = sk[:, None] - 2.0 * cen_dot + cen_norm[None, :]
    return float(per_point.min(axis=1).mean())


def iter_partitions(n: int, k: int):
    """Yield every partition of n items into at most k nonempty clusters,
    once per partition, as canonical label vectors (item 0 labeled 0, each
    new label at most one past the running maximum)."""
    labels = np.zeros(n, dtype=np.int64)

    def rec(i: int, top: int):
        if i == n:
            yield labels.copy()
            return
        for v in range(min(top + 1, k - 1) + 1):
            labels[i] = v
            yield from rec(i + 1, max(top, v))

    yield from rec(1, 0) if n > 1 else iter([labels.copy()])


def brute_force_kmeans(cost_oracle, n: int, k: int) -> tuple[Partition, float]:
    """Exhaustive minimization of ``cost_oracle`` over all partitions.

    Guarded at n <= 14, k <= 3; beyond that the call is refused outright.
    """
    if n < 1 or k < 1:
        raise InvalidArgumentError("n and k must be positive")
    if k > n:
        raise InvalidArgumentError(f"k={k} exceeds n={n}")
    if n > BRUTE_FORCE_MAX_N or k > BRUTE_FORCE_MAX_K:
        raise InvalidArgumentError(
            f"refused: exhaustive search limited to n <= {BRUTE_FORCE_MAX_N}, "
            f"k <= {BRUTE_FORCE_MAX_K} (got n={n}, k={k})"
        )
    best_labels = None
    best_cost = np.inf
    for labels in iter_partitions(n, k):
        cost = float(cost_oracle(Partition(labels=labels, k=k)))
        if cost < best_cost:
            best_cost = cost
            best_labels = labels
    return Partition(labels=best_labels, k=k), best_cost


def test_cost(embedder: Embedder, model: ClusterModel, test) -> float:
    """Exact kernel-space cost of the fitted centroids on held-out points.

    Each point contributes its squared embedded distance to the nearest
    centroid plus its own projection residual k(x,x) - |coords|^2.
    """
    pts = as_points(test)
    if model.centroids.shape[1] != embedder.rank:
        raise InvalidArgumentError("model centroids do not match the embedder rank")
    emb = embed(embedder, pts)
    d2 = _sq_distances(emb.coords, model.centroids).min(axis=1)
    return float((d2 + emb.residuals).mean())


def fit_embedded(
    embedder: Embedder,
    embedded,
    k: int,
    rng,
    max_iter: int = DEFAULT_MAX_ITER,
    move_tol: float = DEFAULT_MOVE_TOL,
) -> ClusterModel:
    """Seed, run Lloyd on an EmbeddedSet, and attach lifted coefficients."""
    from .embedding import lift_centroids

    rng = np.random.default_rng(rng)
    init = kmeanspp_seed(embedded.coords, k, rng)
    model = lloyd(
        embedded.coords,
        init,
        max_iter=max_iter,
        move_tol=move_tol,
        residuals=embedded.residuals,
    )
    lifted = lift_centroids(embedder, model.centroids)
    return ClusterModel(
        centroids=model.centroids,
        assignments=model.assignments,
        k=model.k,
        iterations_run=model.iterations_run,
        converged=model.converged,
        embedded_cost=model.embedded_cost,
        residual_cost=model.residual_cost,
        total_cost=model.total_cost,
        lifted=lifted,
        cost_history=model.cost_history,
    )
