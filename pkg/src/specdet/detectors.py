"""CEM, matched filter (MF) and augmented CEM (ACEM) detectors.

All three are linear filters ``y_i = w^T r_i`` with different weights and
centring:

* CEM minimizes the mean squared output ``w^T R w`` subject to
  ``d^T w = 1``; ``w = R^-1 d / (d^T R^-1 d)``.
* MF works on mean-removed pixels; ``w = K^-1 (d - m) / ((d - m)^T K^-1 (d - m))``.
* ACEM is CEM run on the pixels with an all-one band appended and the
  target ``(d, 1)``. Its first ``L`` weights are a positive multiple of the
  MF weights.

Weights are computed from :class:`~specdet.stats.SceneStats` through
Cholesky solves; no inverse is formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from specdet import linalg
from specdet.cube import SpectralCube
from specdet.errors import (
    DegenerateMean,
    DimensionMismatch,
    EmptySubset,
    NotPositiveDefinite,
    SingularAugmentedCorrelation,
    SingularCorrelation,
    SingularCovariance,
    TargetEqualsMean,
    ZeroSignature,
)
from specdet.stats import SceneStats, augment_stats, ridge_stats

KINDS = ("cem", "mf", "acem")


@dataclass(frozen=True)
class TargetSignature:
    values: np.ndarray
    name: str = "target"

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise DimensionMismatch("empty target signature")
        if not np.all(np.isfinite(v)):
            raise ValueError("target signature contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]

    def augmented(self) -> "TargetSignature":
        return TargetSignature(np.append(self.values, 1.0), name=f"{self.name}+1")


@dataclass(frozen=True)
class BandSubset:
    """A non-empty, strictly increasing set of **1-based** band indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise EmptySubset("band subset is empty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"band indices must be strictly increasing: {idx}")
        if idx[0] < 1:
            raise ValueError(f"band indices are 1-based: {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def parse(cls, text: str) -> "BandSubset":
        """Parse a comma list such as ``"1,3,4"``."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise EmptySubset("band subset is empty")
        return cls(tuple(sorted(int(p) for p in parts)))

    def zero_based(self, bands: int) -> np.ndarray:
        if self.indices[-1] > bands:
            raise DimensionMismatch(f"band {self.indices[-1]} outside 1..{bands}")
        return np.array(self.indices) - 1

    def __len__(self):
        return len(self.indices)

    def __str__(self):
        return "{" + ",".join(map(str, self.indices)) + "}"


@dataclass(frozen=True, eq=False)
class DetectorWeights:
    """Filter weights plus the normalizing scalar.

    ``normalizer`` is ``1/(d^T R^-1 d)`` for CEM, ``1/((d-m)^T K^-1 (d-m))``
    for MF and ``1/(d~^T R~^-1 d~)`` for ACEM; for CEM it is also the
    minimum output energy. ACEM weights have ``L + 1`` entries, the last one
    multiplying the all-one band.
    """

    weights: np.ndarray
    normalizer: float
    kind: str
    subset: BandSubset | None = None
    ridge: float = 0.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}")
        w = np.array(self.weights, dtype=float)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True, eq=False)
class DetectionMap:
    scores: np.ndarray
    kind: str

    @property
    def rows(self) -> int:
        return self.scores.shape[0]

    @property
    def cols(self) -> int:
        return self.scores.shape[1]


def _signature(d, bands: int) -> np.ndarray:
    if not isinstance(d, TargetSignature):
        d = TargetSignature(d)
    if len(d) != bands:
        raise DimensionMismatch(f"target has {len(d)} bands, statistics have {bands}")
    if not np.any(d.values):
        raise ZeroSignature("target signature is all zeros")
    return d.values


def _solve(matrix, rhs, error):
    try:
        return linalg.spd_solve(matrix, rhs)
    except NotPositiveDefinite as exc:
        raise error(str(exc)) from None


def cem_weights(stats: SceneStats, d, ridge: float = 0.0) -> DetectorWeights:
    """Constrained energy minimization filter ``R^-1 d / (d^T R^-1 d)``.

    Parameters
    ----------
    stats : SceneStats
    d : TargetSignature or array-like
        Target spectrum of length ``L``.
    ridge : float, optional
        Diagonal load ``ridge * trace(R) / L``; off by default.

    Raises
    ------
    SingularCorrelation
        If ``R`` is not numerically positive definite.
    ZeroSignature
        If ``d`` is all zeros.
    """
    d = _signature(d, stats.bands)
    stats = ridge_stats(stats, ridge)
    r_inv_d = _solve(stats.correlation, d, SingularCorrelation)
    normalizer = 1.0 / float(d @ r_inv_d)
    return DetectorWeights(normalizer * r_inv_d, normalizer, "cem", ridge=ridge)


def mf_weights(stats: SceneStats, d, ridge: float = 0.0) -> DetectorWeights:
    """Matched filter ``K^-1 (d - m) / ((d - m)^T K^-1 (d - m))``.

    Scores are normalized so that a pixel equal to ``d`` scores 1 after
    mean removal.

    Raises
    ------
    SingularCovariance
        If ``K`` is not numerically positive definite.
    TargetEqualsMean
        If ``d == m`` (the normalizing denominator vanishes).
    """
    d = _signature(d, stats.bands)
    stats = ridge_stats(stats, ridge)
    diff = d - stats.mean
    if not np.any(diff):
        raise TargetEqualsMean("target signature equals the scene mean")
    k_inv_diff = _solve(stats.covariance, diff, SingularCovariance)
    denom = float(diff @ k_inv_diff)
    if not denom > 0:
        raise TargetEqualsMean(f"(d-m)^T K^-1 (d-m) = {denom:.3e}")
    normalizer = 1.0 / denom
    return DetectorWeights(normalizer * k_inv_diff, normalizer, "mf", ridge=ridge)


def mf_weights_expanded(stats: SceneStats, d, ridge: float = 0.0) -> DetectorWeights:
    """Matched filter computed from ``R`` only, via the rank-one expansion.

    ``K^-1 (d - m) = R^-1 d + b1 (b2 - 1) R^-1 m`` with
    ``b1 = 1/(1 - m^T R^-1 m)`` and ``b2 = m^T R^-1 d``. The result matches
    :func:`mf_weights`; ``b1`` and ``b2`` are kept in ``extras``.

    Raises
    ------
    DegenerateMean
        If ``1 - m^T R^-1 m`` is not safely positive.
    """
    d = _signature(d, stats.bands)
    stats = ridge_stats(stats, ridge)
    m = stats.mean
    if not np.any(d - m):
        raise TargetEqualsMean("target signature equals the scene mean")
    solved = _solve(stats.correlation, np.column_stack([d, m]), SingularCorrelation)
    r_inv_d, r_inv_m = solved[:, 0], solved[:, 1]
    gap = 1.0 - float(m @ r_inv_m)
    if not gap > linalg.MEAN_TOLERANCE:
        raise DegenerateMean(f"1 - m^T R^-1 m = {gap:.3e}")
    b1 = 1.0 / gap
    b2 = float(m @ r_inv_d)
    direction = r_inv_d + b1 * (b2 - 1.0) * r_inv_m
    denom = float((d - m) @ direction)
    if not denom > 0:
        raise TargetEqualsMean(f"(d-m)^T K^-1 (d-m) = {denom:.3e}")
    normalizer = 1.0 / denom
    return DetectorWeights(
        normalizer * direction, normalizer, "mf", ridge=ridge, extras={"b1": b1, "b2": b2}
    )


def acem_weights(stats: SceneStats, d, ridge: float = 0.0) -> DetectorWeights:
    """CEM on the data with an all-one band appended.

    Solves ``R~ x = d~`` with ``R~ = [[R, m], [m^T, 1]]`` and ``d~ = (d, 1)``
    and returns ``x / (d~^T x)``, a vector of length ``L + 1``.

    Raises
    ------
    SingularAugmentedCorrelation
        If ``R~`` is singular, i.e. the data already contain a constant band
        or an affine dependence between bands.
    """
    d = _signature(d, stats.bands)
    stats = ridge_stats(stats, ridge)
    aug = augment_stats(stats)
    d_aug = np.append(d, 1.0)
    x = _solve(aug.correlation, d_aug, SingularAugmentedCorrelation)
    normalizer = 1.0 / float(d_aug @ x)
    return DetectorWeights(normalizer * x, normalizer, "acem", ridge=ridge)


def cem_subset_weights(stats: SceneStats, d, subset: BandSubset | Sequence[int], ridge: float = 0.0) -> DetectorWeights:
    """CEM restricted to the bands in ``subset`` (1-based indices)."""
    if not isinstance(subset, BandSubset):
        subset = BandSubset(tuple(subset))
    d = _signature(d, stats.bands)
    idx = subset.zero_based(stats.bands)
    sub = SceneStats.from_moments(
        stats.mean[idx], stats.correlation[np.ix_(idx, idx)], n_pixels=max(stats.n_pixels, 1)
    )
    w = cem_weights(sub, d[idx], ridge=ridge)
    return DetectorWeights(w.weights, w.normalizer, "cem", subset=subset, ridge=ridge)


def output_energy(stats: SceneStats, d, subset: BandSubset | Sequence[int] | None = None) -> float:
    """Minimum CEM output energy ``1 / (d^T R^-1 d)``, optionally over a band subset."""
    if subset is None:
        return cem_weights(stats, d).normalizer
    return cem_subset_weights(stats, d, subset).normalizer


def _weighted_sum(pixels: np.ndarray, w: np.ndarray) -> np.ndarray:
    # band-by-band accumulation: every pixel sees the same sequence of
    # operations, so equal spectra give bit-equal scores
    out = np.zeros(pixels.shape[0])
    for k in range(w.shape[0]):
        out += pixels[:, k] * w[k]
    return out


def apply_detector(cube: SpectralCube, weights: DetectorWeights, stats: SceneStats | None = None) -> DetectionMap:
    """Score every pixel of ``cube``.

    CEM: ``y = w^T r``; MF: ``y = w^T (r - m)`` with ``m`` from ``stats``;
    ACEM: ``y = w[:L]^T r + w[L]`` (the all-one band is never materialized).

    Raises
    ------
    DimensionMismatch
        If weight and cube band counts are incompatible, or MF is applied
        without statistics.
    """
    pixels = cube.pixels
    w = weights.weights
    if weights.subset is not None:
        pixels = pixels[:, weights.subset.zero_based(cube.bands)]
    expected = pixels.shape[1] + (1 if weights.kind == "acem" else 0)
    if w.shape[0] != expected:
        raise DimensionMismatch(
            f"{weights.kind} weights have {w.shape[0]} entries, cube needs {expected}"
        )
    if weights.kind == "cem":
        scores = _weighted_sum(pixels, w)
    elif weights.kind == "mf":
        if stats is None:
            raise DimensionMismatch("matched filter needs scene statistics for centring")
        if stats.bands != pixels.shape[1]:
            raise DimensionMismatch("statistics and cube band counts differ")
        scores = _weighted_sum(pixels - stats.mean, w)
    else:
        scores = _weighted_sum(pixels, w[:-1]) + w[-1]
    return DetectionMap(scores.reshape(cube.rows, cube.cols), weights.kind)


def detector_weights(kind: str, stats: SceneStats, d, ridge: float = 0.0) -> DetectorWeights:
    """Dispatch on ``kind`` in ``{"cem", "mf", "acem"}``."""
    try:
        fn = {"cem": cem_weights, "mf": mf_weights, "acem": acem_weights}[kind]
    except KeyError:
        raise ValueError(f"unknown detector {kind!r}") from None
    return fn(stats, d, ridge=ridge)
