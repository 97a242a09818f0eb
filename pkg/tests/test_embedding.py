import numpy as np
import pytest

from kkmeans import (
    DegenerateMatrixError,
    Dictionary,
    InvalidArgumentError,
    KernelSpec,
    build_embedder,
    eig_psd,
    embed,
    embed_lifted,
    gram,
    lift_centroids,
    load_embedder,
    sample_uniform,
    save_embedder,
)
from kkmeans.embedding import embedder_from_dict, embedder_to_dict

from conftest import random_kernel, random_points


class TestEigPsd:
    def test_identity(self):
        u, lam = eig_psd(np.eye(3))
        assert np.allclose(lam, [1.0, 1.0, 1.0])
        assert np.allclose(u @ u.T, np.eye(3), atol=1e-12)

    def test_exact_zero_truncated(self):
        u, lam = eig_psd(np.array([[2.0, 0.0], [0.0, 0.0]]))
        assert lam.shape == (1,)
        assert lam[0] == pytest.approx(2.0)
        assert u.shape == (2, 1)

    def test_reconstruction_bound(self, rng):
        for _ in range(30):
            pts = random_points(rng, n=int(rng.integers(2, 10)))
            K = gram(random_kernel(rng, pts), pts).values
            u, lam = eig_psd(K, rank_tol=1e-10)
            resid = np.linalg.norm(K - (u * lam) @ u.T, "fro")
            m = K.shape[0]
            assert resid <= np.sqrt(m) * max(1e-10 * lam[0], 1e-10)

    def test_three_point_gaussian_reconstruction(self, rng):
        pts = rng.normal(size=(3, 2))
        K = gram(KernelSpec.gaussian(1.0), pts).values
        u, lam = eig_psd(K)
        assert np.abs(K - (u * lam) @ u.T).max() <= 1e-8

    def test_asymmetric_rejected(self):
        with pytest.raises(InvalidArgumentError):
            eig_psd(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_zero_matrix_degenerate(self):
        with pytest.raises(DegenerateMatrixError):
            eig_psd(np.zeros((3, 3)))

    def test_indefinite_rejected(self):
        with pytest.raises(InvalidArgumentError):
            eig_psd(np.diag([1.0, -0.5]))

    def test_descending_order(self, rng):
        K = np.diag([1.0, 5.0, 3.0])
        _, lam = eig_psd(K)
        assert np.all(np.diff(lam) <= 0)


class TestBuildEmbedder:
    def test_single_gaussian_landmark(self, rng):
        pts = rng.normal(size=(5, 2))
        e = build_embedder(pts, Dictionary(indices=np.array([2])), KernelSpec.gaussian(1.0))
        assert np.array_equal(e.transform, np.array([[1.0]]))

    def test_full_rank_linear_all_points(self, rng):
        pts = rng.normal(size=(6, 3))
        spec = KernelSpec.linear_for(pts)
        e = build_embedder(pts, np.arange(6), spec)
        K = gram(spec, pts).values
        assert e.rank == np.linalg.matrix_rank(K, tol=1e-8)

    def test_whitening(self, rng):
        for _ in range(100):
            pts = random_points(rng, n=int(rng.integers(5, 51)))
            spec = random_kernel(rng, pts)
            m = int(rng.integers(1, 11))
            e = build_embedder(pts, sample_uniform(len(pts), m, rng), spec)
            kmm = gram(spec, e.landmark_points).values
            white = e.transform @ kmm @ e.transform.T
            assert np.abs(white - np.eye(e.rank)).max() <= 1e-8

    def test_duplicate_landmarks_truncated(self, rng):
        pts = rng.normal(size=(8, 2))
        e = build_embedder(pts, np.array([1, 1, 1, 4]), KernelSpec.gaussian(1.0))
        assert e.m == 4
        assert e.rank <= 2

    def test_zero_variance_linear_degenerate(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0]])
        spec = KernelSpec(family="linear", kappa_sq=2.0)
        with pytest.raises(DegenerateMatrixError):
            build_embedder(pts, np.array([0, 0]), spec)

    def test_bad_index_rejected(self, rng):
        pts = rng.normal(size=(4, 2))
        with pytest.raises(InvalidArgumentError):
            build_embedder(pts, np.array([4]), KernelSpec.gaussian(1.0))


class TestEmbed:
    def test_landmarks_have_zero_residuals(self, rng):
        pts = rng.normal(size=(9, 2))
        idx = np.array([0, 2, 5, 7])
        e = build_embedder(pts, idx, KernelSpec.gaussian(1.0))
        assert e.rank == len(idx)  # distinct gaussian landmarks: full rank
        out = embed(e, pts[idx])
        assert out.residuals.max() <= 1e-8

    def test_gaussian_norm_bounded(self, rng):
        pts = rng.normal(size=(12, 3))
        e = build_embedder(pts, sample_uniform(12, 5, rng), KernelSpec.gaussian(0.8))
        out = embed(e, rng.normal(size=(20, 3)) * 3)
        norms = np.einsum("ij,ij->i", out.coords, out.coords)
        assert norms.max() <= 1.0 + 1e-8

    def test_inner_products_match_pseudo_inverse_oracle(self, rng):
        pts = rng.normal(size=(10, 2))
        spec = KernelSpec.gaussian(1.2)
        idx = sample_uniform(10, 4, rng)
        e = build_embedder(pts, idx, spec)
        out = embed(e, pts)
        K = gram(spec, pts).values
        knm = K[:, idx.indices]
        kmm = K[np.ix_(idx.indices, idx.indices)]
        oracle = knm @ np.linalg.pinv(kmm) @ knm.T
        assert np.abs(out.coords @ out.coords.T - oracle).max() <= 1e-8

    def test_gram_reproduction_frobenius(self, rng):
        for _ in range(20):
            pts = random_points(rng)
            spec = random_kernel(rng, pts)
            dic = sample_uniform(len(pts), int(rng.integers(1, len(pts) + 1)), rng)
            e = build_embedder(pts, dic, spec)
            out = embed(e, pts)
            K = gram(spec, pts).values
            knm = K[:, dic.indices]
            kmm = K[np.ix_(dic.indices, dic.indices)]
            oracle = knm @ np.linalg.pinv(kmm, rcond=1e-12) @ knm.T
            err = np.linalg.norm(out.coords @ out.coords.T - oracle, "fro")
            assert err <= 1e-8 * max(1.0, np.linalg.norm(oracle, "fro"))

    def test_residual_formula_nonnegative(self, rng):
        pts = rng.normal(size=(15, 2))
        e = build_embedder(pts, sample_uniform(15, 6, rng), KernelSpec.gaussian(1.0))
        out = embed(e, pts)
        raw = out.self_kernel - np.einsum("ij,ij->i", out.coords, out.coords)
        assert raw.min() >= -1e-8
        assert np.allclose(out.residuals, np.maximum(raw, 0.0))

    def test_residual_monotone_in_dictionary(self, rng):
        # growing the dictionary can only shrink residuals
        pts = rng.normal(size=(20, 3))
        spec = KernelSpec.gaussian(1.5)
        seq = rng.integers(0, 20, size=10)
        prev = None
        for m in range(1, 11):
            e = build_embedder(pts, seq[:m], spec)
            res = embed(e, pts).residuals
            if prev is not None:
                assert (res - prev).max() <= 1e-8
            prev = res

    def test_dimension_mismatch(self, rng):
        pts = rng.normal(size=(6, 2))
        e = build_embedder(pts, np.array([0]), KernelSpec.gaussian(1.0))
        with pytest.raises(InvalidArgumentError):
            embed(e, rng.normal(size=(3, 5)))

    def test_worker_invariance(self, rng):
        pts = rng.normal(size=(30, 2))
        e = build_embedder(pts, sample_uniform(30, 8, rng), KernelSpec.gaussian(1.0))
        base = embed(e, pts).coords
        assert np.array_equal(embed(e, pts, n_workers=4).coords, base)


class TestLiftCentroids:
    def test_zero_maps_to_zero(self, rng):
        pts = rng.normal(size=(8, 2))
        e = build_embedder(pts, sample_uniform(8, 3, rng), KernelSpec.gaussian(1.0))
        lifted = lift_centroids(e, np.zeros((1, e.rank)))
        assert np.array_equal(lifted, np.zeros((1, e.m)))

    def test_roundtrip_landmark_centroid(self, rng):
        pts = rng.normal(size=(9, 2))
        idx = np.array([0, 3, 6])
        e = build_embedder(pts, idx, KernelSpec.gaussian(1.0))
        out = embed(e, pts[idx])
        lifted = lift_centroids(e, out.coords[:1])
        back = embed_lifted(e, lifted)
        assert np.abs(back - out.coords[:1]).max() <= 1e-8
        # the lifted coefficients reproduce k(., landmark_0) evaluations
        kmm = gram(e.kernel, e.landmark_points).values
        assert np.abs(kmm @ lifted[0] - kmm[:, 0]).max() <= 1e-8

    def test_roundtrip_mean_centroid(self, rng):
        for _ in range(20):
            pts = random_points(rng)
            spec = random_kernel(rng, pts)
            e = build_embedder(pts, sample_uniform(len(pts), 5, rng), spec)
            out = embed(e, pts)
            centroid = out.coords.mean(axis=0, keepdims=True)
            back = embed_lifted(e, lift_centroids(e, centroid))
            assert np.abs(back - centroid).max() <= 1e-8

    def test_shape_mismatch(self, rng):
        pts = rng.normal(size=(6, 2))
        e = build_embedder(pts, np.arange(6), KernelSpec.gaussian(1.0))
        with pytest.raises(InvalidArgumentError):
            lift_centroids(e, np.zeros((1, e.rank + 1)))


class TestSerialization:
    def test_roundtrip(self, rng, tmp_path):
        pts = rng.normal(size=(10, 3))
        e = build_embedder(pts, sample_uniform(10, 4, rng), KernelSpec.gaussian(1.4))
        path = tmp_path / "embedder.json"
        save_embedder(e, path)
        loaded = load_embedder(path)
        assert np.array_equal(loaded.transform, e.transform)
        assert np.array_equal(loaded.landmark_points, e.landmark_points)
        assert np.array_equal(loaded.kept_eigenvalues, e.kept_eigenvalues)
        assert loaded.kernel == e.kernel
        assert loaded.rank_tol == e.rank_tol

    def test_bad_magic_rejected(self, rng):
        pts = rng.normal(size=(5, 2))
        e = build_embedder(pts, np.array([0, 1]), KernelSpec.gaussian(1.0))
        payload = embedder_to_dict(e)
        payload["magic"] = "something-else"
        with pytest.raises(InvalidArgumentError):
            embedder_from_dict(payload)

    def test_bad_version_rejected(self, rng):
        pts = rng.normal(size=(5, 2))
        e = build_embedder(pts, np.array([0, 1]), KernelSpec.gaussian(1.0))
        payload = embedder_to_dict(e)
        payload["version"] = 99
        with pytest.raises(InvalidArgumentError):
            embedder_from_dict(payload)

    def test_roundtrip_preserves_embeddings(self, rng, tmp_path):
        pts = rng.normal(size=(12, 2))
        spec = KernelSpec.linear_for(pts)
        e = build_embedder(pts, sample_uniform(12, 5, rng), spec)
        path = tmp_path / "emb.json"
        save_embedder(e, path)
        loaded = load_embedder(path)
        assert np.array_equal(embed(loaded, pts).coords, embed(e, pts).coords)
