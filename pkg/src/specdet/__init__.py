"""Spectral target detection: CEM, matched filter and augmented CEM."""

__version__ = "0.1.0"

from specdet.cube import SpectralCube
from specdet.detectors import (
    BandSubset,
    DetectionMap,
    DetectorWeights,
    TargetSignature,
    acem_weights,
    apply_detector,
    cem_subset_weights,
    cem_weights,
    mf_weights,
    mf_weights_expanded,
    output_energy,
)
from specdet.stats import SceneStats, accumulate_stats, augment_stats, merge_stats

__all__ = [
    "BandSubset",
    "DetectionMap",
    "DetectorWeights",
    "SceneStats",
    "SpectralCube",
    "TargetSignature",
    "accumulate_stats",
    "acem_weights",
    "apply_detector",
    "augment_stats",
    "cem_subset_weights",
    "cem_weights",
    "merge_stats",
    "mf_weights",
    "mf_weights_expanded",
    "output_energy",
]
