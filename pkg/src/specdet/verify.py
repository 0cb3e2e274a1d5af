"""Numerical certification of the two detector theorems plus comparison metrics.

``check_theorem1``
    Band monotonicity of CEM: the minimum output energy over all bands is
    strictly below the minimum over any proper band subset, provided the
    bands are linearly independent.
``check_theorem2``
    The first ``L`` ACEM weights equal ``c * w_MF`` with
    ``c = c_ACEM / c_MF``, so the two detection maps are affinely related
    (Pearson R^2 = 1) and rank pixels identically.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np
import scipy.stats

from specdet import linalg
from specdet.cube import SpectralCube
from specdet.detectors import (
    BandSubset,
    DetectionMap,
    TargetSignature,
    acem_weights,
    apply_detector,
    mf_weights,
    output_energy,
)
from specdet.errors import (
    DegenerateTruth,
    DegenerateVariance,
    DimensionMismatch,
    NumericalError,
    SingularCorrelation,
)
from specdet.stats import SceneStats, accumulate_stats

MAX_ENUMERATION_BANDS = 12
INDEPENDENCE_RTOL = 1e-8
THEOREM1_RTOL = 1e-12
THEOREM2_R2_TOL = 1e-10
THEOREM2_WEIGHT_TOL = 1e-8


@dataclass
class Theorem1Report:
    full_energy: float
    subset_energies: list[tuple[BandSubset, float | None]]
    violations: list[BandSubset]
    strict_margin: float
    singular_subsets: list[BandSubset] = field(default_factory=list)
    dependent_bands: bool = False
    tolerance: float = THEOREM1_RTOL

    @property
    def certified(self) -> bool:
        return not self.violations and not self.singular_subsets and not self.dependent_bands

    def to_dict(self) -> dict:
        return {
            "full_energy": self.full_energy,
            "strict_margin": self.strict_margin,
            "n_subsets": len(self.subset_energies),
            "n_violations": len(self.violations),
            "violations": [str(s) for s in self.violations],
            "singular_subsets": [str(s) for s in self.singular_subsets],
            "dependent_bands": self.dependent_bands,
            "tolerance": self.tolerance,
            "certified": self.certified,
            "subset_energies": {str(s): e for s, e in self.subset_energies},
        }


@dataclass
class Theorem2Report:
    c_ratio: float
    max_component_deviation: float
    map_r2: float
    affine_params: tuple[float, float]
    predicted_affine: tuple[float, float]
    expansion_deviation: float
    weight_tol: float = THEOREM2_WEIGHT_TOL
    r2_tol: float = THEOREM2_R2_TOL

    @property
    def certified(self) -> bool:
        return self.max_component_deviation <= self.weight_tol and self.map_r2 >= 1.0 - self.r2_tol

    def to_dict(self) -> dict:
        out = asdict(self)
        out["certified"] = self.certified
        return out


def bands_independent(data, rtol: float = INDEPENDENCE_RTOL) -> bool:
    """True when the smallest singular value of the ``N x L`` pixel matrix
    exceeds ``rtol`` times the largest."""
    x = data.pixels if isinstance(data, SpectralCube) else np.asarray(data, dtype=float)
    if x.shape[0] < x.shape[1]:
        return False
    s = np.linalg.svd(x, compute_uv=False)
    return bool(s[-1] > rtol * s[0])


def proper_subsets(bands: int) -> list[BandSubset]:
    """All non-empty proper subsets of ``1..bands``, by size then lexicographically."""
    if bands > MAX_ENUMERATION_BANDS:
        raise ValueError(
            f"exhaustive enumeration is limited to {MAX_ENUMERATION_BANDS} bands; pass subsets explicitly"
        )
    return [
        BandSubset(c)
        for k in range(1, bands)
        for c in itertools.combinations(range(1, bands + 1), k)
    ]


def _psd_min_energy(corr: np.ndarray, d: np.ndarray) -> float:
    # min w^T R w subject to d^T w = 1 for a singular R: zero when d has a
    # component outside range(R), otherwise 1 / (d^T R^+ d)
    pinv = np.linalg.pinv(corr, rcond=1e-10, hermitian=True)
    residual = d - corr @ (pinv @ d)
    if np.linalg.norm(residual) > 1e-8 * np.linalg.norm(d):
        return 0.0
    return 1.0 / float(d @ pinv @ d)


def check_theorem1(
    stats: SceneStats,
    d,
    subsets: Iterable[BandSubset] | str = "all-proper",
    rtol: float = THEOREM1_RTOL,
) -> Theorem1Report:
    """Compare the full-band CEM energy against each band subset.

    A subset is a violation when ``full >= subset - rtol * full``. If the
    full correlation matrix is singular the bands are linearly dependent and
    the theorem does not apply; energies are then evaluated on the
    pseudo-inverse, ``dependent_bands`` is set and non-strict subsets are
    still listed as violations.
    """
    d = d.values if isinstance(d, TargetSignature) else np.asarray(d, dtype=float)
    if isinstance(subsets, str):
        if subsets != "all-proper":
            raise ValueError(f"unknown subset selector {subsets!r}")
        subsets = proper_subsets(stats.bands)
    subsets = [s if isinstance(s, BandSubset) else BandSubset(tuple(s)) for s in subsets]

    dependent = False
    try:
        full = output_energy(stats, d)
    except SingularCorrelation:
        dependent = True
        full = _psd_min_energy(stats.correlation, d)

    energies: list[tuple[BandSubset, float | None]] = []
    violations, singular = [], []
    margin = np.inf
    for subset in subsets:
        try:
            e = output_energy(stats, d, subset)
        except SingularCorrelation:
            if not dependent:
                singular.append(subset)
                energies.append((subset, None))
                continue
            idx = subset.zero_based(stats.bands)
            e = _psd_min_energy(stats.correlation[np.ix_(idx, idx)], d[idx])
        energies.append((subset, e))
        margin = min(margin, e - full)
        if full >= e - rtol * full:
            violations.append(subset)
    return Theorem1Report(full, energies, violations, float(margin), singular, dependent, rtol)


def pearson_r2(x, y) -> float:
    """Squared Pearson correlation, clipped to ``[0, 1]``.

    Raises
    ------
    DegenerateVariance
        If either input is constant.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape or x.size < 2:
        raise DimensionMismatch("need two equal-length inputs of length >= 2")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateVariance("input has zero variance")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx, syy, sxy = xc @ xc, yc @ yc, xc @ yc
    if sxx == 0 or syy == 0:
        raise DegenerateVariance("input has zero variance")
    return float(min(1.0, max(0.0, (sxy / sxx) * (sxy / syy))))


def roc_auc(scores, truth) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic (ties count 1/2).

    Parameters
    ----------
    scores : DetectionMap or array-like
    truth : boolean array-like of the same shape; True marks targets.
    """
    s = scores.scores if isinstance(scores, DetectionMap) else np.asarray(scores, dtype=float)
    t = np.asarray(truth).astype(bool)
    if s.shape != t.shape:
        raise DimensionMismatch(f"scores {s.shape} and truth {t.shape} differ")
    s, t = s.reshape(-1), t.reshape(-1)
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateTruth("truth mask needs at least one positive and one negative")
    ranks = scipy.stats.rankdata(s)
    u = float(ranks[t].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def check_theorem2(
    cube: SpectralCube,
    d,
    weight_tol: float = THEOREM2_WEIGHT_TOL,
    r2_tol: float = THEOREM2_R2_TOL,
    stats: SceneStats | None = None,
) -> Theorem2Report:
    """Compare ACEM against MF on ``cube``.

    Computes ``c = c_ACEM / c_MF``, the worst relative deviation
    ``max_i |w_ACEM,i - c w_MF,i| / max|w_MF|`` over the first ``L`` weights,
    the R^2 between the two detection maps and the least-squares line
    ``y_ACEM ~ slope * y_MF + intercept``. ``predicted_affine`` is the line
    the theorem implies, ``(c, c w_MF^T m + w_ACEM[L])``;
    ``expansion_deviation`` compares the solved ACEM weights with the
    closed form built from :func:`~specdet.linalg.augmented_inverse`.
    """
    if stats is None:
        stats = accumulate_stats(cube)
    mf = mf_weights(stats, d)
    acem = acem_weights(stats, d)
    c = acem.normalizer / mf.normalizer
    w_mf, w_acem = mf.weights, acem.weights
    scale = float(np.max(np.abs(w_mf)))
    deviation = float(np.max(np.abs(w_acem[:-1] - c * w_mf))) / scale

    y_mf = apply_detector(cube, mf, stats).scores.reshape(-1)
    y_acem = apply_detector(cube, acem, stats).scores.reshape(-1)
    r2 = pearson_r2(y_mf, y_acem)
    slope, intercept = np.polyfit(y_mf, y_acem, 1)
    predicted = (c, c * float(w_mf @ stats.mean) + float(w_acem[-1]))

    # closed-form route: R~^-1 from the block formula, then normalize
    dsig = d.values if isinstance(d, TargetSignature) else np.asarray(d, dtype=float)
    d_aug = np.append(dsig, 1.0)
    try:
        r_inv = linalg.spd_inverse(stats.correlation)
        x = linalg.augmented_inverse(r_inv, stats.mean) @ d_aug
        closed = x / float(d_aug @ x)
        expansion = float(np.max(np.abs(closed - w_acem)) / np.max(np.abs(w_acem)))
    except NumericalError:
        expansion = float("nan")

    return Theorem2Report(
        c_ratio=float(c),
        max_component_deviation=deviation,
        map_r2=r2,
        affine_params=(float(slope), float(intercept)),
        predicted_affine=(float(predicted[0]), float(predicted[1])),
        expansion_deviation=expansion,
        weight_tol=weight_tol,
        r2_tol=r2_tol,
    )


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
