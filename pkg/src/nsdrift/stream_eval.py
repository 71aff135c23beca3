"""Batch-by-batch drift detection over a labeled stream, and scoring."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .detector import DetectorConfig, DriftReport, detect_drift
from .errors import ClassMissing


@dataclass(frozen=True)
class WindowConfig:
    window_size: int = 1000
    detector: DetectorConfig = field(default_factory=DetectorConfig)

    def __post_init__(self):
        if self.window_size < 2 * (self.detector.k + 1):
            raise ValueError(f"window_size must be at least {2 * (self.detector.k + 1)}")


@dataclass(frozen=True)
class BatchDetection:
    """Comparison of batch ``batch_index`` against its predecessor.

    ``report`` is None when the pair was skipped; ``skipped`` then says why.
    """

    batch_index: int
    report: DriftReport | None
    skipped: str | None = None

    @property
    def flagged(self) -> bool:
        return self.report is not None and self.report.drift_flag

    def as_record(self) -> dict:
        rec = {"batch_index": self.batch_index, "skipped": self.skipped}
        if self.report is not None:
            rec["minus"] = self.report.direction_minus.as_dict()
            rec["plus"] = self.report.direction_plus.as_dict()
            rec["drift_flag"] = self.report.drift_flag
        else:
            rec["minus"] = rec["plus"] = None
            rec["drift_flag"] = False
        return rec


@dataclass(frozen=True)
class ScoreCard:
    true_detections: int
    false_alarms: int
    n_drifts: int
    n_batches: int

    @property
    def detection_rate(self) -> float | None:
        return self.true_detections / self.n_drifts if self.n_drifts else None

    @property
    def false_alarm_rate(self) -> float | None:
        return self.false_alarms / self.n_batches if self.n_batches else None

    def __str__(self) -> str:
        return f"{self.true_detections}/{self.false_alarms}"

    def as_dict(self) -> dict:
        return {
            "true_detections": self.true_detections,
            "false_alarms": self.false_alarms,
            "n_drifts": self.n_drifts,
            "n_batches": self.n_batches,
            "detection_rate": self.detection_rate,
            "false_alarm_rate": self.false_alarm_rate,
        }


def run_stream(x, y, cfg: WindowConfig | None = None) -> list[BatchDetection]:
    """Split the stream into consecutive windows and test each against the previous one.

    A trailing partial window is dropped.  Windows lacking a class are reported
    as skipped rather than raising.
    """
    cfg = cfg or WindowConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    w = cfg.window_size
    n_batches = len(y) // w
    if n_batches < 2:
        raise ValueError(f"stream of length {len(y)} holds fewer than two windows of {w}")
    out = []
    for t in range(1, n_batches):
        prev, cur = slice((t - 1) * w, t * w), slice(t * w, (t + 1) * w)
        try:
            report = detect_drift(x[prev], y[prev], x[cur], y[cur], cfg.detector)
        except ClassMissing as exc:
            out.append(BatchDetection(t, None, str(exc)))
            continue
        out.append(BatchDetection(t, report))
    return out


def score(detections: list[BatchDetection], drift_indices, window_size: int) -> ScoreCard:
    """Credit a drift at instance ``D`` to a flag on the first window starting at or after ``D``.

    Each drift and each flag is matched at most once; unmatched flags are false
    alarms.  Skipped batches, and drifts whose credited batch was skipped or
    never evaluated, are left out of all counts.
    """
    drift_indices = list(drift_indices)
    if any(a > b for a, b in zip(drift_indices, drift_indices[1:])):
        raise ValueError("drift indices must be sorted")
    evaluated = {d.batch_index: d for d in detections if d.report is not None}
    flagged = {t for t, d in evaluated.items() if d.flagged}
    matched: set[int] = set()
    n_drifts = 0
    for drift in drift_indices:
        t = math.ceil(drift / window_size)
        if t not in evaluated:
            continue
        n_drifts += 1
        if t in flagged and t not in matched:
            matched.add(t)
    return ScoreCard(
        true_detections=len(matched),
        false_alarms=len(flagged - matched),
        n_drifts=n_drifts,
        n_batches=len(evaluated),
    )


TABLE_FIELDS = [
    "batch_index",
    "k1_minus", "k2_minus", "p_retreat_minus", "p_invasion_minus", "verdict_minus",
    "k1_plus", "k2_plus", "p_retreat_plus", "p_invasion_plus", "verdict_plus",
    "drift_flag", "skipped",
]


def write_report_jsonl(detections: list[BatchDetection], path) -> None:
    with open(path, "w") as fh:
        for d in detections:
            fh.write(json.dumps(d.as_record(), sort_keys=True) + "\n")


def write_report_table(detections: list[BatchDetection], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_FIELDS)
        for d in detections:
            row = [d.batch_index]
            for side in ("direction_minus", "direction_plus"):
                if d.report is None:
                    row += [""] * 5
                else:
                    e = getattr(d.report, side)
                    row += [e.k1, e.k2, f"{e.p_retreat:.17g}", f"{e.p_invasion:.17g}", int(e.verdict)]
            row += [int(d.flagged), d.skipped or ""]
            w.writerow(row)
