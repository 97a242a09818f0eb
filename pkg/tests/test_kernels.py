import math

import numpy as np
import pytest

from kkmeans import (
    Dataset,
    DegenerateBandwidthError,
    InvalidArgumentError,
    KernelSpec,
    auto_bandwidth,
    check_square_gram,
    gram,
    kernel_diag,
    kernel_eval,
)


class TestKernelSpec:
    def test_gaussian_requires_positive_sigma(self):
        with pytest.raises(InvalidArgumentError):
            KernelSpec.gaussian(0.0)
        with pytest.raises(InvalidArgumentError):
            KernelSpec.gaussian(-1.0)

    def test_gaussian_kappa_is_one(self):
        assert KernelSpec.gaussian(2.0).kappa_sq == 1.0
        with pytest.raises(InvalidArgumentError):
            KernelSpec("gaussian", sigma=1.0, kappa_sq=2.0)

    def test_linear_bound_covers_max_norm(self):
        pts = np.array([[1.0, 2.0], [3.0, 0.0]])
        spec = KernelSpec.linear_for(pts)
        assert spec.kappa_sq >= 9.0

    def test_unknown_family(self):
        with pytest.raises(InvalidArgumentError):
            KernelSpec("polynomial")


class TestKernelEval:
    def test_gaussian_self_is_one(self):
        for sigma in (0.1, 1.0, 7.3):
            spec = KernelSpec.gaussian(sigma)
            assert kernel_eval(spec, [1.0, -2.0], [1.0, -2.0]) == 1.0

    def test_linear_dot_product(self):
        spec = KernelSpec(family="linear", kappa_sq=30.0)
        assert kernel_eval(spec, [1.0, 2.0], [3.0, 4.0]) == 11.0

    def test_gaussian_closed_form_half(self):
        spec = KernelSpec.gaussian(1.0)
        t = math.sqrt(2.0 * math.log(2.0))
        assert kernel_eval(spec, [0.0], [t]) == pytest.approx(0.5, abs=1e-15)

    def test_symmetric_exactly(self, rng):
        specs = [KernelSpec.gaussian(0.7), KernelSpec(family="linear", kappa_sq=100.0)]
        for _ in range(50):
            x = rng.normal(size=3)
            y = rng.normal(size=3)
            for spec in specs:
                assert kernel_eval(spec, x, y) == kernel_eval(spec, y, x)

    def test_gaussian_bounded(self, rng):
        spec = KernelSpec.gaussian(1.3)
        for _ in range(100):
            v = kernel_eval(spec, rng.normal(size=4) * 5, rng.normal(size=4) * 5)
            assert 0.0 < v <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            kernel_eval(KernelSpec.gaussian(1.0), [0.0], [0.0, 1.0])

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            kernel_eval(KernelSpec.gaussian(1.0), [np.nan], [0.0])
        with pytest.raises(InvalidArgumentError):
            kernel_eval(KernelSpec.gaussian(1.0), [np.inf], [0.0])


class TestGram:
    def test_gaussian_unit_diagonal(self, rng):
        pts = rng.normal(size=(3, 2))
        G = gram(KernelSpec.gaussian(0.9), pts)
        assert np.array_equal(np.diag(G.values), np.ones(3))

    def test_linear_standard_basis_identity(self):
        spec = KernelSpec(family="linear", kappa_sq=1.0)
        G = gram(spec, np.eye(2))
        assert np.array_equal(G.values, np.eye(2))

    def test_gaussian_two_points_offdiag(self):
        G = gram(KernelSpec.gaussian(1.0), np.array([[0.0], [1.0]]))
        assert G.values[0, 1] == pytest.approx(math.exp(-0.5), abs=1e-15)
        assert G.values[0, 1] == pytest.approx(0.606531, abs=1e-6)

    def test_matches_kernel_eval_entrywise(self, rng):
        pts = rng.normal(size=(7, 3))
        other = rng.normal(size=(4, 3))
        for spec in (KernelSpec.gaussian(1.1), KernelSpec.linear_for(pts)):
            G = gram(spec, pts, other)
            for i in range(7):
                for j in range(4):
                    # shared code path: equality is exact, not approximate
                    assert G.values[i, j] == kernel_eval(spec, pts[i], other[j])

    def test_square_is_symmetric_and_psd(self, rng):
        for trial in range(100):
            n = int(rng.integers(2, 21))
            pts = rng.normal(size=(n, int(rng.integers(1, 5))))
            spec = (
                KernelSpec.gaussian(float(rng.uniform(0.3, 3.0)))
                if trial % 2
                else KernelSpec.linear_for(pts)
            )
            G = gram(spec, pts)
            assert np.array_equal(G.values, G.values.T)
            eigs = np.linalg.eigvalsh(G.values)
            assert eigs[0] >= -1e-8 * max(eigs[-1], 0.0)
            check_square_gram(G, spec.kappa_sq)

    def test_worker_count_invariance(self, rng):
        pts = rng.normal(size=(37, 4))
        spec = KernelSpec.gaussian(1.0)
        base = gram(spec, pts).values
        for workers in (2, 3, 8):
            assert np.array_equal(gram(spec, pts, n_workers=workers).values, base)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(InvalidArgumentError):
            gram(KernelSpec.gaussian(1.0), rng.normal(size=(3, 2)), rng.normal(size=(3, 4)))

    def test_ids_default_to_range(self, rng):
        G = gram(KernelSpec.gaussian(1.0), rng.normal(size=(5, 2)))
        assert G.is_square
        assert np.array_equal(G.row_ids, np.arange(5))


class TestKernelDiag:
    def test_matches_kernel_eval(self, rng):
        pts = rng.normal(size=(6, 3))
        for spec in (KernelSpec.gaussian(0.8), KernelSpec.linear_for(pts)):
            diag = kernel_diag(spec, pts)
            expected = [kernel_eval(spec, p, p) for p in pts]
            assert np.allclose(diag, expected, atol=0.0)


class TestAutoBandwidth:
    def test_two_points_hand_value(self):
        # ordered pairs of {0, 1}: squared distances 0, 1, 1, 0
        sigma = auto_bandwidth(np.array([[0.0], [1.0]]))
        assert sigma == pytest.approx(math.sqrt(2.0) / 4.0, abs=1e-15)

    def test_identical_points_degenerate(self):
        with pytest.raises(DegenerateBandwidthError):
            auto_bandwidth(np.array([[0.0], [0.0]]))

    def test_single_point_invalid(self):
        with pytest.raises(InvalidArgumentError):
            auto_bandwidth(np.array([[1.0]]))

    def test_exact_path_ignores_seed(self, rng):
        pts = rng.normal(size=(40, 3))
        assert auto_bandwidth(pts, seed=1) == auto_bandwidth(pts, seed=999)

    def test_sampled_path_deterministic_and_close(self, rng):
        pts = rng.normal(size=(60, 2))
        exact = auto_bandwidth(pts)
        sampled = auto_bandwidth(pts, max_pairs=2000, seed=5)
        assert sampled == auto_bandwidth(pts, max_pairs=2000, seed=5)
        assert sampled != auto_bandwidth(pts, max_pairs=2000, seed=6)
        assert sampled == pytest.approx(exact, rel=0.1)

    def test_sampled_radicand_unbiased(self, rng):
        # mean over many sampled estimates approaches the exact value
        pts = rng.normal(size=(50, 2))
        exact = auto_bandwidth(pts)
        n = len(pts)
        estimates = [
            auto_bandwidth(pts, max_pairs=500, seed=s) ** 2 * (n * n) ** 2
            for s in range(300)
        ]
        assert np.mean(estimates) == pytest.approx(exact**2 * (n * n) ** 2, rel=0.02)

    def test_dataset_input(self):
        data = Dataset(points=np.array([[0.0], [1.0]]))
        assert auto_bandwidth(data) == pytest.approx(math.sqrt(2.0) / 4.0)


class TestDataset:
    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            Dataset(points=np.array([[np.nan]]))

    def test_rejects_label_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            Dataset(points=np.zeros((3, 1)), labels=np.array([1, 2]))

    def test_shape_properties(self):
        data = Dataset(points=np.zeros((3, 2)))
        assert (data.n, data.d) == (3, 2)
