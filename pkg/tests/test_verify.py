import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURE_PIXELS
from specdet import BandSubset, SpectralCube, accumulate_stats
from specdet.detectors import DetectionMap
from specdet.errors import DegenerateTruth, DegenerateVariance, SingularCovariance
from specdet.verify import (
    bands_independent,
    check_theorem1,
    check_theorem2,
    pearson_r2,
    proper_subsets,
    roc_auc,
)

D = [1.0, 1.0]


def brute_auc(scores, truth):
    pos = [s for s, t in zip(scores, truth) if t]
    neg = [s for s, t in zip(scores, truth) if not t]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


class TestPearson:
    def test_affine(self):
        x = np.arange(10.0)
        assert pearson_r2(x, 2 * x + 3) == pytest.approx(1.0, abs=1e-15)

    def test_negative(self):
        x = np.arange(10.0)
        assert pearson_r2(x, -x) == pytest.approx(1.0, abs=1e-15)

    def test_hand_value(self):
        # sxy = 1, sxx = 2, syy = 2/3
        assert pearson_r2([1, 2, 3], [1, 2, 2]) == pytest.approx(0.75, abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateVariance):
            pearson_r2([1, 1, 1], [1, 2, 3])

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.floats(0.01, 100) | st.floats(-100, -0.01),
        st.floats(-1e3, 1e3),
    )
    def test_affine_invariance(self, seed, slope, shift):
        rng = np.random.default_rng(seed)
        x, y = rng.normal(size=50), rng.normal(size=50)
        base = pearson_r2(x, y)
        assert abs(pearson_r2(slope * x + shift, y) - base) <= 1e-12
        assert abs(pearson_r2(x, slope * y + shift) - base) <= 1e-12


class TestAUC:
    def test_separated(self):
        assert roc_auc([0.1, 0.2, 0.9, 0.95], [0, 0, 1, 1]) == 1.0

    def test_constant(self):
        assert roc_auc([0.3] * 6, [0, 1, 0, 1, 0, 0]) == 0.5

    def test_hand_value(self):
        assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
        assert brute_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            s = rng.integers(0, 6, size=30).astype(float)
            t = rng.random(30) < 0.4
            if t.all() or not t.any():
                continue
            assert roc_auc(s, t) == pytest.approx(brute_auc(s, t), abs=1e-15)

    def test_map_input(self):
        dmap = DetectionMap(np.array([[0.1, 0.9], [0.2, 0.8]]), "cem")
        assert roc_auc(dmap, [[0, 1], [0, 1]]) == 1.0

    def test_degenerate(self):
        with pytest.raises(DegenerateTruth):
            roc_auc([1, 2, 3], [1, 1, 1])


class TestTheorem1:
    def test_fixture(self, fixture_stats):
        rep = check_theorem1(fixture_stats, D)
        assert rep.full_energy == pytest.approx(0.5, abs=1e-12)
        energies = {str(s): e for s, e in rep.subset_energies}
        assert energies == pytest.approx({"{1}": 2 / 3, "{2}": 2 / 3}, abs=1e-12)
        assert rep.violations == []
        assert rep.strict_margin == pytest.approx(1 / 6, abs=1e-12)
        assert rep.certified

    def test_duplicated_band(self):
        x = np.column_stack([FIXTURE_PIXELS[:, 0], FIXTURE_PIXELS[:, 0]])
        assert not bands_independent(x)
        rep = check_theorem1(accumulate_stats(x), D)
        assert rep.dependent_bands
        energies = dict((str(s), e) for s, e in rep.subset_energies)
        assert energies["{1}"] == pytest.approx(rep.full_energy, rel=1e-12)
        assert BandSubset((1,)) in rep.violations
        assert not rep.certified

    def test_exhaustive_oracle(self):
        # oracle: every proper subset energy from a direct LU solve
        rng = np.random.default_rng(21)
        for _ in range(10):
            x = rng.normal(size=(80, 5)) + rng.uniform(0, 3, 5)
            d = rng.uniform(0, 4, 5)
            s = accumulate_stats(x)
            rep = check_theorem1(s, d)
            assert len(rep.subset_energies) == 30
            for subset, e in rep.subset_energies:
                idx = np.array(subset.indices) - 1
                r = s.correlation[np.ix_(idx, idx)]
                assert e == pytest.approx(1 / (d[idx] @ np.linalg.solve(r, d[idx])), rel=1e-10)
            assert rep.certified

    def test_enumeration(self):
        subsets = proper_subsets(6)
        assert len(subsets) == 62
        assert len(set(s.indices for s in subsets)) == 62
        with pytest.raises(ValueError):
            proper_subsets(13)

    def test_explicit_subsets(self, fixture_stats):
        rep = check_theorem1(fixture_stats, D, [BandSubset((2,))])
        assert len(rep.subset_energies) == 1


class TestTheorem2:
    def test_fixture(self, fixture_cube):
        rep = check_theorem2(fixture_cube, D)
        # c = c_ACEM / c_MF = (1/3) / (1/2)
        assert rep.c_ratio == pytest.approx(2 / 3, abs=1e-12)
        assert rep.max_component_deviation <= 1e-12
        assert rep.certified

    def test_exact_inputs_zero_tolerance(self):
        # R = I, m = 0
        cube = SpectralCube.from_pixels([[1, 1], [1, -1], [-1, 1], [-1, -1]])
        rep = check_theorem2(cube, D, weight_tol=0.0, r2_tol=0.0)
        assert rep.certified

    def test_random_scenes(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            bands = int(rng.integers(2, 8))
            x = rng.normal(size=(400, bands)) * rng.uniform(0.5, 2, bands) + rng.uniform(0, 5, bands)
            rep = check_theorem2(SpectralCube.from_pixels(x), rng.uniform(0, 6, bands))
            assert rep.map_r2 >= 1 - 1e-10
            assert rep.max_component_deviation <= 1e-8
            assert rep.expansion_deviation <= 1e-8
            np.testing.assert_allclose(rep.affine_params, rep.predicted_affine, rtol=1e-6, atol=1e-8)

    def test_propagates_detector_error(self):
        with pytest.raises(SingularCovariance):
            check_theorem2(SpectralCube.from_pixels([[3.0, 4.0]]), D)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_theorem1_holds_on_independent_bands(seed):
    rng = np.random.default_rng(seed)
    bands = int(rng.integers(2, 6))
    x = rng.normal(size=(60, bands)) + rng.uniform(-2, 2, bands)
    if not bands_independent(x):
        return
    d = rng.normal(size=bands)
    rep = check_theorem1(accumulate_stats(x), d)
    assert rep.violations == []


def test_subset_count_matches_powerset():
    for n in range(1, 8):
        expected = sum(1 for k in range(1, n) for _ in itertools.combinations(range(n), k))
        assert len(proper_subsets(n)) == expected == 2 ** n - 2
