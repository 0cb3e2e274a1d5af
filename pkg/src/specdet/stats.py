"""Scene statistics: mean vector, sample correlation and covariance.

The raw sums ``sum_i r_i`` and ``sum_i r_i r_i^T`` are accumulated with
:func:`math.fsum`, so every entry is the correctly rounded sum of the
(rounded) per-pixel products. That makes accumulation independent of pixel
order down to the last bit. Division by ``N`` happens once, at
finalization, and the covariance is always derived as ``K = R - m m^T``
rather than from a second centred pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from specdet.cube import SpectralCube
from specdet.errors import BandCountMismatch, DimensionMismatch, EmptyCube
from specdet.linalg import symmetrize


@dataclass(frozen=True, eq=False)
class SceneStats:
    """First and second moments of a set of pixels.

    Attributes
    ----------
    n_pixels : int
        Pixel count ``N``. Zero only for :meth:`empty`, the merge identity.
    mean : (L,) array
        ``m = sum(r_i) / N``.
    correlation : (L, L) array
        Sample correlation ``R = sum(r_i r_i^T) / N`` (uncentred).
    covariance : (L, L) array
        ``K = R - m m^T``.
    band_sum, outer_sum : arrays
        The raw sums, kept so that :func:`merge_stats` is exact.
    """

    n_pixels: int
    mean: np.ndarray
    correlation: np.ndarray
    covariance: np.ndarray
    band_sum: np.ndarray
    outer_sum: np.ndarray

    @property
    def bands(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def from_sums(cls, n_pixels: int, band_sum, outer_sum) -> "SceneStats":
        band_sum = np.array(band_sum, dtype=float)
        outer_sum = symmetrize(outer_sum)
        if outer_sum.shape != (band_sum.shape[0],) * 2:
            raise DimensionMismatch("sum shapes disagree")
        if n_pixels > 0:
            mean = band_sum / n_pixels
            correlation = outer_sum / n_pixels
            covariance = symmetrize(correlation - np.outer(mean, mean))
        else:
            mean = np.full(band_sum.shape, np.nan)
            correlation = np.full(outer_sum.shape, np.nan)
            covariance = correlation.copy()
        for a in (mean, correlation, covariance, band_sum, outer_sum):
            a.flags.writeable = False
        return cls(int(n_pixels), mean, correlation, covariance, band_sum, outer_sum)

    @classmethod
    def from_moments(cls, mean, correlation, n_pixels: int = 1) -> "SceneStats":
        """Statistics from a given mean and correlation matrix.

        Useful for synthetic instances where no pixels exist. The raw sums
        are reconstructed as ``N * m`` and ``N * R``.
        """
        mean = np.asarray(mean, dtype=float)
        correlation = np.asarray(correlation, dtype=float)
        if correlation.shape != (mean.shape[0],) * 2:
            raise DimensionMismatch("mean and correlation sizes disagree")
        stats = cls.from_sums(n_pixels, n_pixels * mean, n_pixels * correlation)
        if n_pixels == 1:
            return stats
        mean = mean.copy()
        correlation = symmetrize(correlation)
        covariance = symmetrize(correlation - np.outer(mean, mean))
        for a in (mean, correlation, covariance):
            a.flags.writeable = False
        return cls(stats.n_pixels, mean, correlation, covariance, stats.band_sum, stats.outer_sum)

    @classmethod
    def empty(cls, bands: int) -> "SceneStats":
        """Identity element for :func:`merge_stats`."""
        return cls.from_sums(0, np.zeros(bands), np.zeros((bands, bands)))


def _pixel_matrix(data) -> np.ndarray:
    if isinstance(data, SpectralCube):
        return data.pixels
    x = np.asarray(data, dtype=float)
    if x.ndim == 3:
        x = x.reshape(-1, x.shape[-1])
    if x.ndim != 2:
        raise DimensionMismatch(f"expected (N, L) pixels or a cube, got shape {x.shape}")
    return x


def accumulate_stats(data) -> SceneStats:
    """Compute :class:`SceneStats` from a cube or an ``(N, L)`` pixel matrix.

    Raises
    ------
    EmptyCube
        If there are no pixels or no bands.
    """
    x = _pixel_matrix(data)
    n, bands = x.shape
    if n == 0 or bands == 0:
        raise EmptyCube("no pixels to accumulate")
    if not np.all(np.isfinite(x)):
        raise ValueError("pixels contain non-finite values")
    band_sum = np.array([math.fsum(x[:, j].tolist()) for j in range(bands)])
    outer_sum = np.empty((bands, bands))
    for i in range(bands):
        for j in range(i, bands):
            outer_sum[i, j] = outer_sum[j, i] = math.fsum((x[:, i] * x[:, j]).tolist())
    return SceneStats.from_sums(n, band_sum, outer_sum)


def augment_stats(stats: SceneStats) -> SceneStats:
    """Statistics of the same pixels with an all-one band appended.

    The correlation becomes ``[[R, m], [m^T, 1]]`` and the mean ``(m, 1)``.
    """
    n, bands = stats.n_pixels, stats.bands
    band_sum = np.append(stats.band_sum, float(n))
    outer_sum = np.empty((bands + 1, bands + 1))
    outer_sum[:bands, :bands] = stats.outer_sum
    outer_sum[:bands, bands] = stats.band_sum
    outer_sum[bands, :bands] = stats.band_sum
    outer_sum[bands, bands] = float(n)
    out = SceneStats.from_sums(n, band_sum, outer_sum)
    if n == 0:
        return out
    # keep the original blocks bit-for-bit (from_moments instances may not
    # satisfy mean == band_sum / N exactly)
    mean = np.append(stats.mean, 1.0)
    corr = np.empty_like(outer_sum)
    corr[:bands, :bands] = stats.correlation
    corr[:bands, bands] = stats.mean
    corr[bands, :bands] = stats.mean
    corr[bands, bands] = 1.0
    cov = symmetrize(corr - np.outer(mean, mean))
    for a in (mean, corr, cov):
        a.flags.writeable = False
    return SceneStats(n, mean, corr, cov, out.band_sum, out.outer_sum)


def merge_stats(a: SceneStats, b: SceneStats) -> SceneStats:
    """Statistics of the union of two disjoint pixel sets."""
    if a.bands != b.bands:
        raise BandCountMismatch(f"cannot merge {a.bands}-band and {b.bands}-band statistics")
    return SceneStats.from_sums(
        a.n_pixels + b.n_pixels, a.band_sum + b.band_sum, a.outer_sum + b.outer_sum
    )


def ridge_stats(stats: SceneStats, epsilon: float) -> SceneStats:
    """Add ``epsilon * trace(R) / L`` to the diagonal of ``R``.

    The covariance is re-derived from the loaded ``R``, so ``K`` receives the
    same diagonal load and ``K = R - m m^T`` still holds.
    """
    if epsilon < 0:
        raise ValueError("ridge must be non-negative")
    if epsilon == 0:
        return stats
    load = epsilon * float(np.trace(stats.correlation)) / stats.bands
    corr = stats.correlation + load * np.eye(stats.bands)
    return SceneStats.from_moments(stats.mean, corr, n_pixels=stats.n_pixels)
