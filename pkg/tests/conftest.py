import numpy as np
import pytest

from kkmeans import Dataset, KernelSpec


def random_points(rng, n=None, d=None, scale=None):
    n = int(rng.integers(4, 30)) if n is None else n
    d = int(rng.integers(1, 5)) if d is None else d
    scale = float(rng.uniform(0.3, 3.0)) if scale is None else scale
    return rng.normal(size=(n, d)) * scale


def random_kernel(rng, points):
    if rng.integers(0, 2) == 0:
        return KernelSpec.gaussian(float(rng.uniform(0.5, 3.0)))
    return KernelSpec.linear_for(points)


def gaussian_mixture(n, seed, d=2, n_components=4, spread=4.0, std=0.6):
    """Well-separated component mixture with labels."""
    rng = np.random.default_rng(seed)
    centers = np.eye(n_components, d) * spread if d >= n_components else None
    if centers is None:
        centers = rng.normal(size=(n_components, d)) * spread
    labels = rng.integers(0, n_components, size=n)
    points = centers[labels] + rng.normal(size=(n, d)) * std
    return Dataset(points=points, labels=labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_mixture_csv(path, n=300, seed=0, d=3, std=0.6, spread=4.0):
    data = gaussian_mixture(n, seed, d=d, std=std, spread=spread)
    header = ",".join(f"x{i}" for i in range(d)) + ",label"
    lines = [header]
    for row, lab in zip(data.points, data.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(lab)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return data
