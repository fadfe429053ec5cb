"""Pseudospectral toolkit for the focusing cubic Schrödinger equation on a
plane-times-circle waveguide, its variational constants and thresholds, and
the large-scale resonant system that governs its wide-data limit."""

__version__ = "0.1.0"

from .spectral import Grid3, Field3, Field2, NormKind
from .groundstate import GNConstants, RadialProfile, compute_constants
from .thresholds import ThresholdReport, classify, diagnostics, gamma
from .propagate import EvolveControls, RunOutcome, SpongeSpec, evolve
from .resonant import VecField2, evolve_rs
from .experiments import LargeScaleResult, VirialTrace

__all__ = [
    "Grid3",
    "Field3",
    "Field2",
    "NormKind",
    "GNConstants",
    "RadialProfile",
    "compute_constants",
    "ThresholdReport",
    "classify",
    "diagnostics",
    "gamma",
    "EvolveControls",
    "RunOutcome",
    "SpongeSpec",
    "evolve",
    "VecField2",
    "evolve_rs",
    "LargeScaleResult",
    "VirialTrace",
    "__version__",
]
