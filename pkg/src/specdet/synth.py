"""Seeded synthetic scenes: Gaussian background with a constant target block.

Random stream
-------------
Bits come from numpy's PCG64 (128-bit LCG with XSL-RR output), seeded with
``numpy.random.PCG64(seed)`` and read through ``random_raw()``. Each raw
64-bit word ``u`` becomes a double ``(u >> 11) * 2**-53``. Standard normals
use the basic Box-Muller transform on consecutive word pairs ``(a, b)``::

    u1 = ((a >> 11) + 1) * 2**-53          # in (0, 1]
    u2 = (b >> 11) * 2**-53                # in [0, 1)
    z0 = sqrt(-2 ln u1) * cos(2 pi u2)
    z1 = sqrt(-2 ln u1) * sin(2 pi u2)

A request for ``k`` normals consumes ``2 * ceil(k / 2)`` words and returns
``z0, z1`` of each pair in order, truncated to ``k``. Multivariate samples
are ``mean + F z`` where ``F`` is a lower-triangular factor of the
covariance (a semidefinite Cholesky; zero pivots give zero columns), with
``z`` filled pixel-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from specdet.cube import SpectralCube
from specdet.detectors import TargetSignature
from specdet.errors import ConfigError, DimensionMismatch, InvalidRect, NotPSDCovariance

_TWO_POW_53 = float(2**53)


def standard_normals(count: int, seed: int) -> np.ndarray:
    """``count`` standard normal variates from the pinned PCG64/Box-Muller stream."""
    if count < 0:
        raise ValueError("count must be non-negative")
    pairs = (count + 1) // 2
    bitgen = np.random.PCG64(seed)
    raw = bitgen.random_raw(2 * pairs).reshape(pairs, 2) if pairs else np.empty((0, 2), np.uint64)
    u1 = ((raw[:, 0] >> np.uint64(11)) + np.uint64(1)).astype(np.float64) / _TWO_POW_53
    u2 = (raw[:, 1] >> np.uint64(11)).astype(np.float64) / _TWO_POW_53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty((pairs, 2))
    z[:, 0] = radius * np.cos(angle)
    z[:, 1] = radius * np.sin(angle)
    return z.reshape(-1)[:count]


def psd_factor(cov, rtol: float = 1e-10) -> np.ndarray:
    """Lower-triangular ``F`` with ``F F^T = cov`` for a PSD matrix.

    Pivots within ``rtol * max(diag)`` of zero are treated as exact zeros
    (their column is left empty); anything more negative, or a residual
    that cannot be absorbed, raises :class:`NotPSDCovariance`.
    """
    a = np.array(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"covariance must be square, got {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-12, atol=0.0):
        raise NotPSDCovariance("covariance is not symmetric")
    n = a.shape[0]
    tol = rtol * float(np.max(np.abs(np.diag(a)))) if n else 0.0
    f = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - f[j, :j] @ f[j, :j]
        if pivot < -tol:
            raise NotPSDCovariance(f"negative pivot {pivot:.3e} at index {j}")
        col = a[j + 1:, j] - f[j + 1:, :j] @ f[j, :j]
        if pivot <= tol:
            if np.any(np.abs(col) > 10 * tol):
                raise NotPSDCovariance(f"zero pivot with non-zero coupling at index {j}")
            continue
        f[j, j] = math.sqrt(pivot)
        f[j + 1:, j] = col / f[j, j]
    return f


def sample_mvn(mean, covariance, n: int, seed: int) -> np.ndarray:
    """``n`` draws from ``N(mean, covariance)`` as an ``(n, L)`` array."""
    mean = np.asarray(mean, dtype=float).reshape(-1)
    cov = np.asarray(covariance, dtype=float)
    if cov.shape != (mean.shape[0],) * 2:
        raise DimensionMismatch("mean and covariance sizes disagree")
    factor = psd_factor(cov)
    z = standard_normals(n * mean.shape[0], seed).reshape(n, mean.shape[0])
    return mean + z @ factor.T


@dataclass(frozen=True)
class SceneConfig:
    """Layout and distribution of a synthetic scene.

    ``target_rect`` is ``(row0, col0, height, width)`` in 0-based pixels.
    The defaults (a flat, strongly correlated 2-band cloud and a bright
    target block) are illustrative, not taken from any dataset.
    """

    rows: int = 50
    cols: int = 50
    bands: int = 2
    background_mean: tuple[float, ...] = (0.0, 0.0)
    background_covariance: tuple[tuple[float, ...], ...] = ((1.0, 0.95), (0.95, 1.0))
    target_rect: tuple[int, int, int, int] = (22, 22, 5, 5)
    target_signature: tuple[float, ...] = (1.5, 1.5)
    seed: int = 0

    def validate(self) -> None:
        if self.rows < 1 or self.cols < 1 or self.bands < 1:
            raise ConfigError("rows, cols and bands must be positive")
        if len(self.background_mean) != self.bands or len(self.target_signature) != self.bands:
            raise ConfigError("background_mean and target_signature need one value per band")
        cov = np.asarray(self.background_covariance, dtype=float)
        if cov.shape != (self.bands, self.bands):
            raise ConfigError(f"background_covariance must be {self.bands}x{self.bands}")
        r0, c0, h, w = self.target_rect
        if h < 1 or w < 1 or r0 < 0 or c0 < 0 or r0 + h > self.rows or c0 + w > self.cols:
            raise InvalidRect(f"target rect {self.target_rect} outside {self.rows}x{self.cols} image")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")


def centered_rect(rows: int, cols: int, height: int, width: int) -> tuple[int, int, int, int]:
    return ((rows - height) // 2, (cols - width) // 2, height, width)


def generate_scene(cfg: SceneConfig) -> tuple[SpectralCube, np.ndarray, TargetSignature]:
    """Background from ``N(mean, cov)`` plus an exact-signature target block.

    Returns the cube, a boolean ``rows x cols`` truth mask and the target.
    """
    cfg.validate()
    n = cfg.rows * cfg.cols
    pixels = sample_mvn(cfg.background_mean, cfg.background_covariance, n, cfg.seed)
    values = pixels.reshape(cfg.rows, cfg.cols, cfg.bands)
    truth = np.zeros((cfg.rows, cfg.cols), dtype=bool)
    r0, c0, h, w = cfg.target_rect
    values[r0:r0 + h, c0:c0 + w, :] = np.asarray(cfg.target_signature, dtype=float)
    truth[r0:r0 + h, c0:c0 + w] = True
    return SpectralCube(values), truth, TargetSignature(np.asarray(cfg.target_signature), name="synthetic")


def random_scene_config(seed: int, bands: int, rows: int = 50, cols: int = 50, target: int = 5) -> SceneConfig:
    """A reproducible scene with random positive mean, random SPD covariance
    and a target offset from the mean.

    Parameters are drawn from ``numpy.random.default_rng(seed)``; only the
    background pixels use the pinned stream.
    """
    rng = np.random.default_rng(seed)
    mean = rng.uniform(1.0, 5.0, bands)
    a = rng.normal(size=(bands, bands))
    cov = a @ a.T / bands + 0.1 * np.eye(bands)
    cov = (cov + cov.T) / 2
    signature = mean + rng.uniform(0.5, 2.0, bands) * rng.choice([-1.0, 1.0], bands)
    return SceneConfig(
        rows=rows,
        cols=cols,
        bands=bands,
        background_mean=tuple(mean.tolist()),
        background_covariance=tuple(tuple(r) for r in cov.tolist()),
        target_rect=centered_rect(rows, cols, target, target),
        target_signature=tuple(signature.tolist()),
        seed=seed,
    )


# -- plain-text config files ----------------------------------------------
#
#   rows = 50
#   cols = 50
#   bands = 2
#   background_mean = 0, 0
#   background_covariance = 1, 0.95; 0.95, 1      (rows separated by ';')
#   target_rect = 22, 22, 5, 5                    (row0, col0, height, width)
#   target_signature = 1.5, 1.5
#   seed = 0
#
# '#' starts a comment. Omitted keys take the SceneConfig defaults, except
# that background_mean/covariance/target_signature/target_rect must be given
# whenever bands != 2.

_INT_KEYS = ("rows", "cols", "bands", "seed")
_KEYS = _INT_KEYS + ("background_mean", "background_covariance", "target_rect", "target_signature")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def parse_scene_config(text: str) -> SceneConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace(" ", "_")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value, 0)
            elif key == "background_covariance":
                values[key] = tuple(_floats(row) for row in value.split(";") if row.strip())
            elif key == "target_rect":
                values[key] = tuple(int(t) for t in value.replace(",", " ").split())
            else:
                values[key] = _floats(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if "target_rect" in values and len(values["target_rect"]) != 4:
        raise ConfigError("target_rect needs four integers")
    cfg = SceneConfig(**values)
    cfg.validate()
    return cfg


def format_scene_config(cfg: SceneConfig) -> str:
    def nums(xs):
        return ", ".join(repr(float(x)) for x in xs)

    lines = [
        f"rows = {cfg.rows}",
        f"cols = {cfg.cols}",
        f"bands = {cfg.bands}",
        f"background_mean = {nums(cfg.background_mean)}",
        "background_covariance = " + "; ".join(nums(r) for r in cfg.background_covariance),
        "target_rect = " + ", ".join(str(int(v)) for v in cfg.target_rect),
        f"target_signature = {nums(cfg.target_signature)}",
        f"seed = {cfg.seed}",
    ]
    return "\n".join(lines) + "\n"


def load_scene_config(path: str | Path) -> SceneConfig:
    return parse_scene_config(Path(path).read_text())


def with_seed(cfg: SceneConfig, seed: int) -> SceneConfig:
    return replace(cfg, seed=seed)
