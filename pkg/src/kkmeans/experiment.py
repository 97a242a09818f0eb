"""End-to-end benchmark runner: seeded sweeps over dictionary size, repeated
runs, train/test cost and NMI reporting, and plot-ready CSV emission."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import landmarks as lm
from .clustering import ClusterModel, fit_embedded, test_cost
from .data_io import ingest
from .embedding import build_embedder, embed, DEFAULT_RANK_TOL
from .errors import InvalidArgumentError
from .kernels import (
    DEFAULT_MAX_PAIRS,
    Dataset,
    GAUSSIAN,
    KernelSpec,
    LINEAR,
    auto_bandwidth,
    gram,
)
from .metrics import nmi as nmi_score
from .metrics import summarize_runs

_MASK64 = (1 << 64) - 1

# Stream tags keep the derived seeds for distinct purposes disjoint.
STREAM_SPLIT = 0x51
STREAM_BANDWIDTH = 0xB4
STREAM_CELL = 0xCE

CSV_HEADER = (
    "m,m_effective,repeat,seed,W_train,W_test,residual_mean,nmi,d_eff,"
    "iterations,t_embed_ms,t_lloyd_ms"
)

SUMMARY_HEADER = (
    "m,repeats,W_train_mean,W_train_half_width,W_test_mean,W_test_half_width,"
    "nmi_mean,nmi_half_width"
)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def child_seed(root: int, *path: int) -> int:
    """Derive a child seed from a root seed and a counter path.

    SplitMix-style mixing over (root, *path); appending new grid points or
    repeats never perturbs the seeds of existing (m_index, repeat) cells.
    """
    state = _splitmix64(root & _MASK64)
    for part in path:
        state = _splitmix64(state ^ ((part & _MASK64) | 1))
    return state


@dataclass(frozen=True)
class ExperimentConfig:
    """Frozen description of one benchmark sweep (flat key-value JSON on disk)."""

    data_path: str = ""
    data_format: str = "csv"
    label_column: int | str | None = None
    scale_255: bool = False
    kernel_family: str = GAUSSIAN
    sigma: float | None = None  # None -> pairwise bandwidth heuristic
    k: int = 2
    sampler: str = "uniform"
    m_grid: tuple[int, ...] | None = None
    gamma_grid: tuple[float, ...] | None = None
    gamma: float | None = None  # ridge for leverage scores; default sqrt(n_train)
    epsilon: float = 0.5
    delta: float = 0.1
    repeats: int = 1
    test_fraction: float = 0.2
    seed: int = 0
    max_iter: int = 300
    move_tol: float = 1e-9
    rank_tol: float = DEFAULT_RANK_TOL
    max_pairs: int = DEFAULT_MAX_PAIRS
    nmi_on_test: bool = False
    collect_timings: bool = False
    output_path: str | None = None

    def __post_init__(self):
        if self.data_format not in ("csv", "libsvm", "idx"):
            raise InvalidArgumentError(f"unknown data format {self.data_format!r}")
        if self.kernel_family not in (GAUSSIAN, LINEAR):
            raise InvalidArgumentError(f"unknown kernel family {self.kernel_family!r}")
        if self.sampler not in ("uniform", "rls"):
            raise InvalidArgumentError(f"unknown sampler {self.sampler!r}")
        if (self.m_grid is None) == (self.gamma_grid is None):
            raise InvalidArgumentError("exactly one of m_grid / gamma_grid is required")
        if self.m_grid is not None:
            grid = tuple(int(m) for m in self.m_grid)
            if not grid or any(m < 1 for m in grid):
                raise InvalidArgumentError("m_grid must be non-empty positive integers")
            object.__setattr__(self, "m_grid", grid)
        if self.gamma_grid is not None:
            grid = tuple(float(g) for g in self.gamma_grid)
            if not grid or any(not (g > 0 and math.isfinite(g)) for g in grid):
                raise InvalidArgumentError("gamma_grid must be non-empty positive reals")
            object.__setattr__(self, "gamma_grid", grid)
        if self.k < 1:
            raise InvalidArgumentError("k must be positive")
        if self.repeats < 1:
            raise InvalidArgumentError("repeats must be at least 1")
        if not (0.0 < self.test_fraction < 1.0):
            raise InvalidArgumentError("test_fraction must lie in (0, 1)")
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidArgumentError("epsilon must lie in (0, 1)")
        if not (0.0 < self.delta < 1.0):
            raise InvalidArgumentError("delta must lie in (0, 1)")
        if self.sigma is not None and self.sigma <= 0:
            raise InvalidArgumentError("sigma override must be positive")
        if self.max_iter < 1:
            raise InvalidArgumentError("max_iter must be at least 1")

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(payload)
        for grid_key in ("m_grid", "gamma_grid"):
            if kwargs.get(grid_key) is not None:
                kwargs[grid_key] = tuple(kwargs[grid_key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        for grid_key in ("m_grid", "gamma_grid"):
            if d[grid_key] is not None:
                d[grid_key] = list(d[grid_key])
        return d


@dataclass(frozen=True)
class RunRecord:
    """One (dictionary size, repeat) cell of a sweep."""

    m: int
    m_effective: int
    repeat: int
    seed: int
    W_train: float
    W_test: float
    residual_mean: float
    nmi: float | None
    d_eff: float | None
    iterations: int
    t_embed_ms: float
    t_lloyd_ms: float


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic disjoint and exhaustive train/test split."""
    if n < 2:
        raise InvalidArgumentError("need at least two points to split")
    if not (0.0 < test_fraction < 1.0):
        raise InvalidArgumentError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(child_seed(seed, STREAM_SPLIT))
    perm = rng.permutation(n)
    n_test = min(n - 1, max(1, int(round(n * test_fraction))))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def _resolve_kernel(cfg: ExperimentConfig, train_points: np.ndarray) -> KernelSpec:
    if cfg.kernel_family == GAUSSIAN:
        sigma = cfg.sigma
        if sigma is None:
            sigma = auto_bandwidth(
                train_points,
                max_pairs=cfg.max_pairs,
                seed=child_seed(cfg.seed, STREAM_BANDWIDTH),
            )
        return KernelSpec.gaussian(sigma)
    return KernelSpec.linear_for(train_points)


def _cell_grid(cfg: ExperimentConfig, n_train: int, kernel: KernelSpec, train_points):
    """Resolve the sweep into (grid_index, m, scores) triples.

    In gamma mode the landmark count comes from the sampler's size formula;
    leverage scores are computed per distinct ridge as needed.
    """
    scores_cache: dict[float, lm.LeverageScores] = {}
    train_gram = None

    def scores_for(gamma: float) -> lm.LeverageScores:
        nonlocal train_gram
        if gamma not in scores_cache:
            if train_gram is None:
                train_gram = gram(kernel, train_points)
            scores_cache[gamma] = lm.rls_exact(train_gram.values, gamma)
        return scores_cache[gamma]

    cells = []
    if cfg.m_grid is not None:
        default_gamma = cfg.gamma if cfg.gamma is not None else math.sqrt(n_train)
        scores = scores_for(default_gamma) if cfg.sampler == "rls" else None
        for gi, m in enumerate(cfg.m_grid):
            cells.append((gi, min(int(m), n_train), scores))
    else:
        for gi, gamma in enumerate(cfg.gamma_grid):
            if cfg.sampler == "rls":
                scores = scores_for(gamma)
                m = lm.rls_size(n_train, scores.d_eff, cfg.epsilon, cfg.delta, kernel.kappa_sq)
            else:
                scores = None
                m = lm.uniform_size(n_train, gamma, cfg.epsilon, cfg.delta, kernel.kappa_sq)
            cells.append((gi, m, scores))
    return cells


def _run_cell(
    cfg: ExperimentConfig,
    kernel: KernelSpec,
    train: Dataset,
    test_points: np.ndarray,
    test_labels,
    grid_index: int,
    m: int,
    scores,
    repeat: int,
) -> RunRecord:
    seed = child_seed(cfg.seed, STREAM_CELL, grid_index, repeat)
    rng = np.random.default_rng(seed)
    if cfg.sampler == "rls":
        dictionary = lm.sample_rls(
            scores, cfg.epsilon, cfg.delta, kernel.kappa_sq, rng, m=m
        )
    else:
        dictionary = lm.sample_uniform(train.n, m, rng)

    clock = time.perf_counter if cfg.collect_timings else None
    t0 = clock() if clock else 0.0
    embedder = build_embedder(train.points, dictionary, kernel, rank_tol=cfg.rank_tol)
    embedded = embed(embedder, train.points)
    t_embed = (clock() - t0) * 1e3 if clock else 0.0

    t1 = clock() if clock else 0.0
    model = fit_embedded(
        embedder, embedded, cfg.k, rng, max_iter=cfg.max_iter, move_tol=cfg.move_tol
    )
    t_lloyd = (clock() - t1) * 1e3 if clock else 0.0

    w_test = test_cost(embedder, model, test_points)
    nmi_value = None
    if cfg.nmi_on_test:
        if test_labels is not None:
            test_assign = _assign_points(embedder, model, test_points)
            nmi_value = nmi_score(test_labels, test_assign)
    elif train.labels is not None:
        nmi_value = nmi_score(train.labels, model.assignments)

    return RunRecord(
        m=m,
        m_effective=embedder.rank,
        repeat=repeat,
        seed=seed,
        W_train=model.total_cost,
        W_test=w_test,
        residual_mean=model.residual_cost,
        nmi=nmi_value,
        d_eff=None if scores is None else scores.d_eff,
        iterations=model.iterations_run,
        t_embed_ms=t_embed,
        t_lloyd_ms=t_lloyd,
    )


def _assign_points(embedder, model: ClusterModel, points) -> np.ndarray:
    emb = embed(embedder, points)
    d2 = np.square(emb.coords[:, None, :] - model.centroids[None, :, :]).sum(axis=2)
    return np.argmin(d2, axis=1)


def run_experiment(cfg: ExperimentConfig, n_workers: int = 1, data: Dataset | None = None) -> list[RunRecord]:
    """Run the full sweep described by ``cfg``.

    Every record is a pure function of (cfg, cfg.seed): the split, bandwidth,
    dictionaries and seeding all derive from the root seed through the
    counter scheme, and cells are independent, so the worker count changes
    only wall time. Pass ``data`` to skip file ingestion.
    """
    if data is None:
        data = ingest(cfg.data_path, cfg.data_format, cfg.scale_255, cfg.label_column)
    train_idx, test_idx = split_indices(data.n, cfg.test_fraction, cfg.seed)
    train = Dataset(
        points=data.points[train_idx],
        labels=None if data.labels is None else data.labels[train_idx],
    )
    test_points = data.points[test_idx]
    test_labels = None if data.labels is None else data.labels[test_idx]
    if cfg.k > train.n:
        raise InvalidArgumentError(f"k={cfg.k} exceeds the training size {train.n}")

    kernel = _resolve_kernel(cfg, train.points)
    cells = _cell_grid(cfg, train.n, kernel, train.points)
    jobs = [
        (gi, m, scores, repeat)
        for gi, m, scores in cells
        for repeat in range(cfg.repeats)
    ]

    def work(job):
        gi, m, scores, repeat = job
        return _run_cell(
            cfg, kernel, train, test_points, test_labels, gi, m, scores, repeat
        )

    workers = max(1, int(n_workers))
    if workers == 1:
        return [work(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(work, jobs))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_csv(records: list[RunRecord], path) -> None:
    """Write records with the fixed header; floats use repr so parsing the
    file back reproduces them exactly."""
    if not records:
        raise InvalidArgumentError("no records to emit")
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    _fmt(r.m),
                    _fmt(r.m_effective),
                    _fmt(r.repeat),
                    _fmt(r.seed),
                    _fmt(r.W_train),
                    _fmt(r.W_test),
                    _fmt(r.residual_mean),
                    _fmt(r.nmi),
                    _fmt(r.d_eff),
                    _fmt(r.iterations),
                    _fmt(r.t_embed_ms),
                    _fmt(r.t_lloyd_ms),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_records_csv(path) -> list[RunRecord]:
    """Parse a file written by emit_csv back into records."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidArgumentError(f"{path}: not a run-record CSV")
    records = []
    for ln in lines[1:]:
        cells = ln.split(",")
        records.append(
            RunRecord(
                m=int(cells[0]),
                m_effective=int(cells[1]),
                repeat=int(cells[2]),
                seed=int(cells[3]),
                W_train=float(cells[4]),
                W_test=float(cells[5]),
                residual_mean=float(cells[6]),
                nmi=float(cells[7]) if cells[7] else None,
                d_eff=float(cells[8]) if cells[8] else None,
                iterations=int(cells[9]),
                t_embed_ms=float(cells[10]),
                t_lloyd_ms=float(cells[11]),
            )
        )
    return records


def emit_summary(records: list[RunRecord], path, confidence: float = 0.95) -> None:
    """Per-m mean and confidence half-width of train/test cost and NMI."""
    if not records:
        raise InvalidArgumentError("no records to summarize")
    order: list[int] = []
    groups: dict[int, list[RunRecord]] = {}
    for r in records:
        if r.m not in groups:
            order.append(r.m)
            groups[r.m] = []
        groups[r.m].append(r)
    lines = [SUMMARY_HEADER]
    for m in order:
        rows = groups[m]
        cells = [str(m), str(len(rows))]
        for getter in (
            lambda r: r.W_train,
            lambda r: r.W_test,
            lambda r: r.nmi,
        ):
            values = [getter(r) for r in rows]
            if any(v is None for v in values):
                cells.extend(["", ""])
            elif len(values) < 2:
                cells.extend([_fmt(values[0]), ""])
            else:
                mean, half = summarize_runs(values, confidence)
                cells.extend([_fmt(mean), _fmt(half)])
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
