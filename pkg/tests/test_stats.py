import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_PIXELS
from specdet import SpectralCube
from specdet.errors import BandCountMismatch, EmptyCube
from specdet.linalg import symmetrize
from specdet.stats import SceneStats, accumulate_stats, augment_stats, merge_stats


def two_pass(x):
    """Reference moments straight from the definitions."""
    n = x.shape[0]
    m = x.sum(axis=0) / n
    r = sum(np.outer(p, p) for p in x) / n
    k = sum(np.outer(p - m, p - m) for p in x) / n
    return m, r, k


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


def test_single_pixel():
    s = accumulate_stats(np.array([[3.0, 4.0]]))
    np.testing.assert_array_equal(s.mean, [3, 4])
    np.testing.assert_array_equal(s.correlation, [[9, 12], [12, 16]])
    np.testing.assert_array_equal(s.covariance, np.zeros((2, 2)))


def test_three_pixel_fixture():
    s = accumulate_stats(FIXTURE_PIXELS)
    assert s.n_pixels == 3
    np.testing.assert_allclose(s.mean, [2 / 3, 2 / 3], atol=1e-15)
    np.testing.assert_allclose(s.correlation, np.array([[2, 1], [1, 2]]) / 3, atol=1e-15)
    np.testing.assert_allclose(s.covariance, np.array([[2, -1], [-1, 2]]) / 9, atol=1e-15)


def test_cube_and_matrix_inputs_agree(fixture_cube):
    a = accumulate_stats(fixture_cube)
    b = accumulate_stats(FIXTURE_PIXELS)
    assert np.array_equal(a.correlation, b.correlation)


def test_covariance_identity_and_two_pass():
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.normal(2.0, 3.0, size=(int(rng.integers(5, 400)), int(rng.integers(1, 8))))
        s = accumulate_stats(x)
        m, r, k = two_pass(x)
        assert rel_err(s.correlation, r) <= 1e-12
        assert rel_err(s.mean, m) <= 1e-12
        # K is built from R and m, not from a centred pass
        np.testing.assert_array_equal(s.covariance, symmetrize(s.correlation - np.outer(s.mean, s.mean)))
        assert rel_err(s.covariance, k) <= 1e-10
        assert np.all(np.diag(s.correlation) >= 0)
        assert np.array_equal(s.covariance, s.covariance.T)


def test_permutation_invariance_is_bitwise():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(500, 5)) * 10 ** rng.uniform(-3, 3, size=(500, 1))
    a = accumulate_stats(x)
    b = accumulate_stats(x[rng.permutation(500)])
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.correlation, b.correlation)


def test_empty():
    with pytest.raises(EmptyCube):
        accumulate_stats(np.empty((0, 3)))


class TestAugment:
    def test_fixture(self):
        aug = augment_stats(accumulate_stats(FIXTURE_PIXELS))
        want = np.array([[2, 1, 2], [1, 2, 2], [2, 2, 3]]) / 3
        np.testing.assert_allclose(aug.correlation, want, atol=1e-15)
        np.testing.assert_allclose(aug.mean, [2 / 3, 2 / 3, 1], atol=1e-15)

    def test_equals_physical_augmentation(self):
        x = np.random.default_rng(1).normal(size=(200, 4))
        aug = augment_stats(accumulate_stats(x))
        direct = accumulate_stats(np.column_stack([x, np.ones(200)]))
        assert np.array_equal(aug.correlation, direct.correlation)
        assert np.array_equal(aug.mean, direct.mean)

    def test_zero_mean(self):
        x = np.array([[1.0, 2.0], [-1.0, -2.0], [3.0, 0.5], [-3.0, -0.5]])
        s = accumulate_stats(x)
        aug = augment_stats(s)
        np.testing.assert_array_equal(aug.correlation[:2, :2], s.correlation)
        np.testing.assert_array_equal(aug.correlation[2], [0, 0, 1])

    def test_double_augmentation_singular(self):
        from specdet import linalg
        from specdet.errors import NotPositiveDefinite

        twice = augment_stats(augment_stats(accumulate_stats(FIXTURE_PIXELS)))
        np.testing.assert_array_equal(twice.correlation[2:, 2:], [[1, 1], [1, 1]])
        with pytest.raises(NotPositiveDefinite):
            linalg.cholesky(twice.correlation)


class TestMerge:
    def test_identity(self, fixture_stats):
        merged = merge_stats(fixture_stats, SceneStats.empty(2))
        assert merged.n_pixels == 3
        assert np.array_equal(merged.correlation, fixture_stats.correlation)
        assert np.array_equal(merged.mean, fixture_stats.mean)

    def test_split_fixture(self, fixture_stats):
        merged = merge_stats(accumulate_stats(FIXTURE_PIXELS[:1]), accumulate_stats(FIXTURE_PIXELS[1:]))
        np.testing.assert_allclose(merged.correlation, fixture_stats.correlation, rtol=1e-12)
        np.testing.assert_allclose(merged.mean, fixture_stats.mean, rtol=1e-12)

    def test_band_mismatch(self, fixture_stats):
        with pytest.raises(BandCountMismatch):
            merge_stats(fixture_stats, SceneStats.empty(3))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_commutative_associative_exact(self, seed, bands):
        rng = np.random.default_rng(seed)
        parts = [rng.normal(1.0, 2.0, size=(int(rng.integers(1, 60)), bands)) for _ in range(3)]
        a, b, c = (accumulate_stats(p) for p in parts)
        ab, ba = merge_stats(a, b), merge_stats(b, a)
        assert np.array_equal(ab.correlation, ba.correlation)
        left = merge_stats(ab, c)
        right = merge_stats(a, merge_stats(b, c))
        assert rel_err(left.correlation, right.correlation) <= 1e-12
        whole = accumulate_stats(np.vstack(parts))
        assert rel_err(left.correlation, whole.correlation) <= 1e-12
        assert rel_err(left.mean, whole.mean) <= 1e-12
        k = left.correlation - np.outer(left.mean, left.mean)
        assert np.max(np.abs(left.covariance - k)) <= 1e-10 * np.max(np.abs(left.correlation))


def test_from_moments_roundtrip():
    m = np.array([0.3, -1.2])
    r = np.array([[2.0, 0.1], [0.1, 3.0]])
    s = SceneStats.from_moments(m, r, n_pixels=7)
    assert np.array_equal(s.mean, m)
    assert np.array_equal(s.correlation, r)


def test_immutable(fixture_stats):
    with pytest.raises(ValueError):
        fixture_stats.correlation[0, 0] = 5.0


def test_cube_rejects_non_finite():
    with pytest.raises(ValueError):
        SpectralCube(np.array([[[np.nan]]]))
