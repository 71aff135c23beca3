"""kNN classification-gap estimation and the retreat/invasion drift test.

One side of the gap is estimated by growing a ball from every origin point
(one class of the old window) to its k-th nearest reference point (the other
class of the old window).  ``K1`` is the number of distinct reference points
captured, ``K2`` the number of distinct test points (same class, new window)
strictly inside the union of those balls.  NSD then turns ``(K1, K2)`` into
one-sided p-values for the test class retreating from or invading the gap.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ClassMissing, DimensionMismatch, EmptySet, KTooLarge
from .geometry import as_points, count_within_union, knn_batch
from .nsd_stats import nsd

POSITIVE = 1
NEGATIVE = 0


class Verdict(IntEnum):
    NO_DRIFT = 0
    INVASION = 1
    RETREAT = 2


@dataclass(frozen=True)
class DetectorConfig:
    k: int = 1
    theta: float = 0.05

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")


@dataclass(frozen=True)
class GapModel:
    origins: np.ndarray
    radii: np.ndarray
    k: int
    pooled_k1: int


@dataclass(frozen=True)
class DriftEvidence:
    k1: int
    k2: int
    p_retreat: float
    p_invasion: float
    verdict: Verdict

    def as_dict(self) -> dict:
        return {
            "k1": self.k1,
            "k2": self.k2,
            "p_retreat": self.p_retreat,
            "p_invasion": self.p_invasion,
            "verdict": int(self.verdict),
        }


@dataclass(frozen=True)
class DriftReport:
    direction_minus: DriftEvidence
    direction_plus: DriftEvidence

    @property
    def drift_flag(self) -> bool:
        return (
            self.direction_minus.verdict != Verdict.NO_DRIFT
            or self.direction_plus.verdict != Verdict.NO_DRIFT
        )


def estimate_gap(origins, reference, k: int) -> GapModel:
    origins = as_points(origins)
    reference = as_points(reference)
    if origins.shape[0] == 0:
        raise EmptySet("origin set is empty")
    if reference.shape[0] == 0:
        raise EmptySet("reference set is empty")
    if origins.shape[1] != reference.shape[1]:
        raise DimensionMismatch(f"origin dim {origins.shape[1]} vs reference dim {reference.shape[1]}")
    if k > reference.shape[0]:
        raise KTooLarge(f"k={k} exceeds {reference.shape[0]} reference points")
    idx, dist = knn_batch(origins, reference, k)
    pooled = int(np.unique(idx).size)
    return GapModel(origins=origins, radii=dist[:, -1].copy(), k=k, pooled_k1=pooled)


def count_test(gap: GapModel, test) -> int:
    test = as_points(test, dim=gap.origins.shape[1])
    return count_within_union(gap.origins, gap.radii, test)


def decide(k1: int, k2: int, theta: float) -> DriftEvidence:
    """Apply the retreat/invasion rule to the counts ``(K1, K2)``."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if k2 < 0:
        raise ValueError("k2 must be nonnegative")
    p_retreat = nsd(k1, k2 + 1)
    # 1 - NSD(K1, K2) == NSD(K2, K1); Beta(K1, 0) puts all mass at 1, so K2 = 0 gives 1.
    p_invasion = nsd(k2, k1) if k2 > 0 else 1.0
    if k1 > k2 and p_retreat < theta:
        verdict = Verdict.RETREAT
    elif k1 < k2 and p_invasion < theta:
        verdict = Verdict.INVASION
    else:
        verdict = Verdict.NO_DRIFT
    return DriftEvidence(int(k1), int(k2), p_retreat, p_invasion, verdict)


def check_direction(origins, reference, test, k: int, theta: float) -> DriftEvidence:
    gap = estimate_gap(origins, reference, k)
    return decide(gap.pooled_k1, count_test(gap, test), theta)


def split_classes(x, y, k: int, name: str = "window") -> tuple[np.ndarray, np.ndarray]:
    """Split a labeled window into (positive, negative) points, enforcing ``k + 1`` per class."""
    x = as_points(x)
    y = np.asarray(y).reshape(-1)
    if y.size != x.shape[0]:
        raise DimensionMismatch(f"{name}: {x.shape[0]} points but {y.size} labels")
    pos, neg = x[y == POSITIVE], x[y == NEGATIVE]
    if pos.shape[0] + neg.shape[0] != x.shape[0]:
        raise ValueError(f"{name}: labels must be 0 or 1")
    smallest = min(pos.shape[0], neg.shape[0])
    if smallest < k + 1:
        raise ClassMissing(f"{name}: minority class has {smallest} points, need at least {k + 1}")
    return pos, neg


def detect_drift(x1, y1, x2, y2, cfg: DetectorConfig | None = None) -> DriftReport:
    """Compare window 2 against window 1, once per class.

    ``direction_minus`` tests the negative class (origins are old positives,
    reference old negatives, test new negatives); ``direction_plus`` swaps the
    roles of the classes.
    """
    cfg = cfg or DetectorConfig()
    pos1, neg1 = split_classes(x1, y1, cfg.k, "reference window")
    pos2, neg2 = split_classes(x2, y2, cfg.k, "test window")
    if pos1.shape[1] != pos2.shape[1]:
        raise DimensionMismatch(f"window dims {pos1.shape[1]} vs {pos2.shape[1]}")
    minus = check_direction(pos1, neg1, neg2, cfg.k, cfg.theta)
    plus = check_direction(neg1, pos1, pos2, cfg.k, cfg.theta)
    return DriftReport(minus, plus)
