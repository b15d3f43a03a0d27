import numpy as np
import pytest

from rbfonline.errors import DataError, ShapeError, SizingError
from rbfonline.prototypes import (PrototypeSet, default_k, estimate_covariances, fit_prototypes,
                                  kmeans_fit, nearest, online_update, shrink_covariance)

from .conftest import random_spd


def two_blobs(seed, n=500, sigma=1.0, sep=10.0, d=2):
    rng = np.random.default_rng(seed)
    truth = np.zeros((2, d))
    truth[1, 0] = sep * sigma
    lab = rng.integers(0, 2, n)
    return truth[lab] + sigma * rng.standard_normal((n, d)), truth


def _match(centers, truth):
    order = np.argsort(centers[:, 0])
    return np.abs(centers[order] - truth).max()


class TestKMeans:
    def test_single_cluster_is_column_mean(self, rng):
        X = rng.standard_normal((40, 3))
        km = kmeans_fit(X, 1)
        np.testing.assert_allclose(km.centers[0], X.mean(axis=0), rtol=1e-12)

    def test_identical_rows(self):
        X = np.tile([2.0, -1.0], (10, 1))
        km = kmeans_fit(X, 1)
        np.testing.assert_array_equal(km.centers[0], [2.0, -1.0])
        assert km.inertia_path[-1] == 0.0

    def test_two_blob_recovery(self):
        hits = 0
        for s in range(20):
            X, truth = two_blobs(s, sigma=0.1)
            hits += _match(kmeans_fit(X, 2, seed=s).centers, truth) < 0.1
        assert hits >= 19

    @pytest.mark.parametrize("seed", range(5))
    def test_separated_blobs_give_exact_group_means(self, seed):
        X, truth = two_blobs(seed, sigma=1.0)
        group = (X[:, 0] > truth[1, 0] / 2).astype(int)
        km = kmeans_fit(X, 2, seed=seed)
        order = np.argsort(km.centers[:, 0])
        expected = np.vstack([X[group == 0].mean(0), X[group == 1].mean(0)])
        np.testing.assert_allclose(km.centers[order], expected, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_inertia_non_increasing(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((300, 3)) * rng.uniform(0.5, 3, 3)
        path = kmeans_fit(X, 6, seed=seed).inertia_path
        assert all(b <= a * (1 + 1e-12) for a, b in zip(path, path[1:]))

    def test_too_few_rows(self, rng):
        with pytest.raises(SizingError):
            kmeans_fit(rng.standard_normal((3, 2)), 4)

    def test_deterministic_given_seed(self, rng):
        X = rng.standard_normal((100, 2))
        np.testing.assert_array_equal(kmeans_fit(X, 4, seed=3).centers, kmeans_fit(X, 4, seed=3).centers)

    def test_duplicate_points_more_clusters_than_distinct(self):
        X = np.array([[0.0, 0.0]] * 5 + [[1.0, 1.0]] * 5)
        km = kmeans_fit(X, 3)
        assert km.inertia_path[-1] == 0.0

    def test_default_k(self):
        assert default_k(648) == 18
        assert default_k(1) == 2


class TestCovariances:
    def test_singleton_cluster_uses_global_diagonal(self, rng):
        X = rng.standard_normal((50, 2))
        labels = np.zeros(50, dtype=np.int64)
        labels[7] = 1
        centers = np.vstack([X[labels == 0].mean(0), X[7]])
        p = estimate_covariances(X, centers, labels, shrinkage=0.0, eps=0.0, min_members=0)
        np.testing.assert_allclose(p.scatters[1], np.diag(X.var(axis=0, ddof=1)))

    def test_small_cluster_threshold(self, rng):
        X = rng.standard_normal((60, 2))
        labels = np.r_[np.zeros(55, np.int64), np.ones(5, np.int64)]
        centers = np.vstack([X[:55].mean(0), X[55:].mean(0)])
        p_default = estimate_covariances(X, centers, labels)
        p_loose = estimate_covariances(X, centers, labels, min_members=0)
        np.testing.assert_allclose(p_default.scatters[1], np.diag(X.var(axis=0, ddof=1)))
        np.testing.assert_allclose(p_loose.scatters[1], np.cov(X[55:], rowvar=False))

    def test_isotropic_recovery(self, rng):
        sigma = 0.7
        X = sigma * rng.standard_normal((2000, 3))
        p = fit_prototypes(X, 1)
        cov = p.covariance(0)
        np.testing.assert_allclose(np.diag(cov), sigma**2, rtol=0.1)
        assert np.abs(cov - np.diag(np.diag(cov))).max() < 0.1 * sigma**2

    def test_full_shrinkage_is_diagonal(self, rng):
        S = random_spd(rng, 4)
        C = shrink_covariance(S, 1.0, 1e-6)
        np.testing.assert_array_equal(C, np.diag(np.diag(C)))
        np.testing.assert_allclose(np.diag(C), np.diag(S) + 1e-6)

    def test_precision_inverts_covariance(self, rng):
        X = rng.standard_normal((400, 3)) @ rng.standard_normal((3, 3))
        p = fit_prototypes(X, 4)
        for j in range(p.k):
            np.testing.assert_allclose(p.precision(j) @ p.covariance(j), np.eye(3), atol=1e-8)
            C = p.covariance(j)
            np.testing.assert_array_equal(C, C.T)
            assert np.linalg.eigvalsh(C).min() >= p.eps * (1 - 1e-6)


class TestOnline:
    def _pset(self, rng, k=3, d=2):
        X = rng.standard_normal((300, d))
        return fit_prototypes(X, k, min_members=0)

    def test_zero_innovation(self, rng):
        p = self._pset(rng)
        j = 1
        mu = p.means[j].copy()
        w = p.weights[j]
        assert online_update(p, mu, index=j) == j
        np.testing.assert_allclose(p.means[j], mu, rtol=0, atol=1e-15)
        assert p.weights[j] == pytest.approx(p.decay * w + 1)

    def test_updates_nearest_in_mahalanobis(self, rng):
        p = self._pset(rng)
        x = p.means[2] + 1e-3
        before = p.means.copy()
        assert online_update(p, x) == nearest(p, x) == 2
        np.testing.assert_array_equal(p.means[[0, 1]], before[[0, 1]])

    def test_single_prototype_always_updated(self, rng):
        p = fit_prototypes(rng.standard_normal((50, 2)), 1)
        for x in rng.standard_normal((20, 2)) * 5:
            assert online_update(p, x) == 0

    def test_rejects_bad_rows(self, rng):
        p = self._pset(rng)
        snap = p.copy()
        with pytest.raises(DataError):
            online_update(p, np.array([np.nan, 0.0]))
        with pytest.raises(ShapeError):
            online_update(p, np.zeros(3))
        np.testing.assert_array_equal(p.means, snap.means)
        np.testing.assert_array_equal(p.weights, snap.weights)

    def test_sequential_means_match_batch(self, rng):
        X, _ = two_blobs(1, n=400)
        km = kmeans_fit(X, 2)
        p = PrototypeSet(np.zeros((2, 2)), np.stack([np.eye(2)] * 2), np.zeros(2), decay=1.0)
        for x, j in zip(X, km.labels):
            online_update(p, x, index=j)
        np.testing.assert_allclose(p.means, km.centers, atol=1e-6)

    def test_stays_positive_definite(self, rng):
        p = self._pset(rng, k=4, d=3)
        for x in rng.standard_normal((2000, 3)) * rng.uniform(0.1, 4, (2000, 1)):
            online_update(p, x)
        for j in range(p.k):
            np.linalg.cholesky(p.covariance(j))
            np.testing.assert_allclose(p.chols[j] @ p.chols[j].T, p.covariance(j), rtol=1e-10,
                                       atol=1e-14)

    @pytest.mark.slow
    def test_bounded_over_long_stream(self):
        rng = np.random.default_rng(0)
        p = PrototypeSet(rng.standard_normal((3, 2)), np.stack([np.eye(2)] * 3), np.ones(3),
                         decay=1.0)
        for x in rng.standard_normal((100_000, 2)):
            online_update(p, x)
        assert np.abs(p.means).max() < 5.0
        assert np.all(np.isfinite(p.scatters))

    def test_serialisation_round_trip(self, rng):
        p = self._pset(rng)
        q = PrototypeSet.from_dict(p.to_dict())
        np.testing.assert_array_equal(q.means, p.means)
        np.testing.assert_array_equal(q.chols, p.chols)
        assert q[0].weight == p[0].weight
