"""In-memory spectral cube."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from specdet.errors import DimensionMismatch, EmptyCube

LAYOUTS = ("bsq", "bil", "bip")


@dataclass(frozen=True, eq=False)
class SpectralCube:
    """A ``rows x cols x bands`` radiance cube.

    Values are always held as a C-ordered float64 array of shape
    ``(rows, cols, bands)``, i.e. pixel-major with bands contiguous,
    whatever interleave the data came from. ``layout`` records the source
    interleave only.
    """

    values: np.ndarray
    layout: str = "bip"
    wavelengths: tuple[float, ...] | None = None
    band_names: tuple[str, ...] | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise DimensionMismatch(f"cube values must be 3-D, got shape {values.shape}")
        if values.size == 0:
            raise EmptyCube("cube has no pixels or no bands")
        if not np.all(np.isfinite(values)):
            raise ValueError("cube contains non-finite values")
        if self.layout not in LAYOUTS:
            raise ValueError(f"unknown layout {self.layout!r}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_pixels(cls, pixels, rows: int | None = None, cols: int | None = None, **kwargs) -> "SpectralCube":
        """Build a cube from an ``(N, L)`` pixel matrix (default shape ``N x 1``)."""
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim != 2:
            raise DimensionMismatch(f"pixel matrix must be 2-D, got shape {pixels.shape}")
        n = pixels.shape[0]
        if rows is None and cols is None:
            rows, cols = n, 1
        elif rows is None:
            rows = n // cols
        elif cols is None:
            cols = n // rows
        if rows * cols != n:
            raise DimensionMismatch(f"{rows} x {cols} != {n} pixels")
        return cls(pixels.reshape(rows, cols, pixels.shape[1]), **kwargs)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.rows * self.cols

    @property
    def pixels(self) -> np.ndarray:
        """``(N, L)`` read-only view, one row per pixel."""
        return self.values.reshape(self.n_pixels, self.bands)

    def __eq__(self, other):
        if not isinstance(other, SpectralCube):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values.view(np.uint64), other.values.view(np.uint64))
        )

    __hash__ = None
