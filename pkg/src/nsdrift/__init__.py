"""Neighbor-searching discrepancy (NSD) statistics and kNN-gap concept drift detection."""
from .detector import DetectorConfig, DriftEvidence, DriftReport, Verdict, detect_drift
from .errors import (
    ClassMissing,
    DataFormatError,
    DimensionMismatch,
    DomainError,
    EmptySet,
    KTooLarge,
    NSDError,
    NsdParamNonPositive,
    OverflowGuard,
)
from .nsd_stats import nsd, nsd_exact

__version__ = "0.1.0"

__all__ = [
    "ClassMissing",
    "DataFormatError",
    "DetectorConfig",
    "DimensionMismatch",
    "DomainError",
    "DriftEvidence",
    "DriftReport",
    "EmptySet",
    "KTooLarge",
    "NSDError",
    "NsdParamNonPositive",
    "OverflowGuard",
    "Verdict",
    "detect_drift",
    "nsd",
    "nsd_exact",
]
