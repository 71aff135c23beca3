"""Monte Carlo calibration, drift benchmark and timing suites.

Calibration: draw two independent samples, build a search step on the first
(balls around the starting points reaching their k-th neighbor), count the
second sample inside it, and track how often that count falls below each
threshold ``c``.  The frequency should approach ``nsd(K1, c)``.
"""
from __future__ import annotations

import csv
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .datagen import (
    Distribution,
    Gamma,
    Normal,
    PoissonTrivariate,
    StreamKind,
    StreamSpec,
    UniformCube,
    format_distribution,
    gen_linear_shift_stream,
    generate_stream,
    make_rng,
)
from .detector import DetectorConfig, detect_drift, estimate_gap
from .geometry import as_points, ball_volume, count_within_union, knn_excluding
from .nsd_stats import nsd
from .stream_eval import ScoreCard, WindowConfig, run_stream, score


class SearchMode(str, Enum):
    INDEPENDENT = "independent"
    STEPPED = "stepped"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    distribution: Distribution
    dim: int
    n: int
    starting_points: tuple[tuple[float, ...], ...]
    k: int
    thresholds: tuple[int, ...]
    reps: int = 1000
    seed: int = 0
    search_mode: SearchMode = SearchMode.INDEPENDENT
    # Reference values for the scenario, keyed by threshold.
    expected: dict[int, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "search_mode", SearchMode(self.search_mode))
        object.__setattr__(self, "starting_points", tuple(tuple(map(float, p)) for p in self.starting_points))
        object.__setattr__(self, "thresholds", tuple(int(c) for c in self.thresholds))
        if not self.thresholds or min(self.thresholds) < 1:
            raise ValueError("thresholds must be a nonempty list of positive integers")
        if not self.starting_points:
            raise ValueError("at least one starting point is required")
        if any(len(p) != self.dim for p in self.starting_points):
            raise ValueError(f"starting points must have dim {self.dim}")
        if self.k < 1 or self.n < 1 or self.reps < 1 or self.dim < 1:
            raise ValueError("k, n, reps and dim must be positive")
        if self.k * len(self.starting_points) > self.n and self.search_mode is SearchMode.STEPPED:
            raise ValueError("stepped search needs n >= k * len(starting_points)")
        if self.k > self.n:
            raise ValueError("k exceeds n")

    def with_(self, **changes) -> "ScenarioConfig":
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(changes)
        return ScenarioConfig(**fields)


@dataclass
class ConvergenceTrace:
    scenario: str
    thresholds: tuple[int, ...]
    k1: np.ndarray
    k2: np.ndarray
    volume: np.ndarray

    @property
    def reps(self) -> int:
        return len(self.k2)

    def freqs(self) -> np.ndarray:
        """Cumulative frequency of ``K2 < c`` after each repetition, shape ``(reps, len(thresholds))``."""
        hits = self.k2[:, None] < np.array(self.thresholds)[None, :]
        return np.cumsum(hits, axis=0) / np.arange(1, self.reps + 1)[:, None]

    def final_freqs(self) -> dict[int, float]:
        last = self.freqs()[-1]
        return {c: float(f) for c, f in zip(self.thresholds, last)}

    def targets(self) -> dict[int, float]:
        """Mean of ``nsd(K1, c)`` over repetitions (plain ``nsd(K1, c)`` when K1 is fixed)."""
        vals, counts = np.unique(self.k1, return_counts=True)
        w = counts / counts.sum()
        return {c: float(sum(wi * nsd(int(v), c) for v, wi in zip(vals, w))) for c in self.thresholds}

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "reps": self.reps,
            "thresholds": list(self.thresholds),
            "final_freqs": {str(c): f for c, f in self.final_freqs().items()},
            "targets": {str(c): t for c, t in self.targets().items()},
            "k1_min": int(self.k1.min()),
            "k1_max": int(self.k1.max()),
            "k1_mean": float(self.k1.mean()),
            "mean_volume": float(np.mean(self.volume)),
        }


def search_step(starts: np.ndarray, sample: np.ndarray, k: int, mode: SearchMode) -> tuple[np.ndarray, int]:
    """Radii of the balls around ``starts`` and the number of sample points they pool."""
    if mode is SearchMode.INDEPENDENT:
        gap = estimate_gap(starts, sample, k)
        return gap.radii, gap.pooled_k1
    # Each start claims k neighbors not already claimed by earlier starts.
    taken: list[int] = []
    radii = np.empty(starts.shape[0])
    for i, s in enumerate(starts):
        res = knn_excluding(s, sample, k, taken)
        taken.extend(int(j) for j in res.indices)
        radii[i] = res.distances[-1]
    return radii, len(set(taken))


def _calibration_rep(sc: ScenarioConfig, rep: int) -> tuple[int, int, float]:
    rng = make_rng(sc.seed, rep)
    s1 = sc.distribution.sample(sc.n, sc.dim, rng)
    s2 = sc.distribution.sample(sc.n, sc.dim, rng)
    starts = np.asarray(sc.starting_points, dtype=float)
    radii, k1 = search_step(starts, s1, sc.k, sc.search_mode)
    k2 = count_within_union(starts, radii, s2)
    vol = sum(ball_volume(sc.dim, float(r)) for r in radii)
    return k1, k2, vol


def _calibration_chunk(args) -> list[tuple[int, int, float]]:
    sc, reps = args
    return [_calibration_rep(sc, r) for r in reps]


def run_calibration(sc: ScenarioConfig, workers: int = 1) -> ConvergenceTrace:
    """Monte Carlo frequencies of ``K2 < c``; results do not depend on ``workers``."""
    reps = range(sc.reps)
    if workers > 1:
        chunks = [list(reps[i::workers]) for i in range(workers)]
        rows: list = [None] * sc.reps
        with ProcessPoolExecutor(workers) as ex:
            for chunk, res in zip(chunks, ex.map(_calibration_chunk, [(sc, c) for c in chunks])):
                for r, row in zip(chunk, res):
                    rows[r] = row
    else:
        rows = [_calibration_rep(sc, r) for r in reps]
    arr = np.array(rows, dtype=float)
    return ConvergenceTrace(
        scenario=sc.name,
        thresholds=sc.thresholds,
        k1=arr[:, 0].astype(np.int64),
        k2=arr[:, 1].astype(np.int64),
        volume=arr[:, 2],
    )


def write_trace_csv(trace: ConvergenceTrace, path) -> None:
    freqs = trace.freqs()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rep", "k1", "k2", "volume"] + [f"freq_lt_{c}" for c in trace.thresholds])
        for i in range(trace.reps):
            w.writerow(
                [i, int(trace.k1[i]), int(trace.k2[i]), f"{trace.volume[i]:.17g}"]
                + [f"{f:.17g}" for f in freqs[i]]
            )


# -- presets --------------------------------------------------------------------

_NSD10 = (14, 10, 6)
_NSD20 = (15, 20, 25)


def _expected(k1: int, thresholds) -> dict[int, float]:
    return {c: nsd(k1, c) for c in thresholds}


def _preset(name, dist, dim, n, starts, k, thresholds, mode=SearchMode.INDEPENDENT, k1=None):
    k1 = k1 if k1 is not None else k * len(starts)
    return ScenarioConfig(
        name=name, distribution=dist, dim=dim, n=n, starting_points=starts, k=k,
        thresholds=thresholds, search_mode=mode, expected=_expected(k1, thresholds),
    )


def _diagonal(c: int) -> list[tuple[float, float]]:
    return [((i + 0.5) / c, (i + 0.5) / c) for i in range(c)]


def _build_presets() -> dict[str, ScenarioConfig]:
    u = UniformCube()
    p = [
        _preset("exp1_center", u, 2, 1000, [(0.5, 0.5)], 10, _NSD10),
        _preset("exp1_border", u, 2, 1000, [(1.0, 0.3)], 10, _NSD10),
        _preset("exp1_outer", u, 2, 1000, [(1.1, 0.3)], 10, _NSD10),
        _preset("exp1_remote", u, 2, 1000, [(200.0, 0.3)], 10, _NSD10),
    ]
    for d in (10, 100, 1000):
        p.append(_preset(f"exp2_d{d}", u, d, 500, [(0.0,) * d], 10, _NSD10))
    p += [
        _preset("exp3_mu0", Normal(0.0, 1.0), 2, 1000, [(0.0, 0.0)], 10, _NSD10),
        _preset("exp3_mu3", Normal(3.0, 1.0), 2, 1000, [(0.0, 0.0)], 10, _NSD10),
        _preset("exp4_a2_b0.5", Gamma(2.0, 0.5), 2, 1000, [(0.0, 0.0)], 10, _NSD10),
        _preset("exp4_a20_b1", Gamma(20.0, 1.0), 2, 1000, [(0.0, 0.0)], 10, _NSD10),
    ]
    for lam in (10, 100, 200):
        p.append(_preset(f"exp5_lam{lam}", PoissonTrivariate(float(lam)), 2, 1000, [(0.0, 0.0)], 10, _NSD10))
    for c, k in ((2, 10), (4, 5), (10, 2)):
        p.append(_preset(f"exp6_c{c}", u, 2, 1000, _diagonal(c), k, _NSD20))
    overlapping = {
        "exp7_c2": ([(0.5, 0.5), (0.536, 0.5)], 15),
        "exp7_c4": ([(0.5, 0.5), (0.53, 0.5), (0.56, 0.5), (0.586, 0.5)], 10),
        "exp7_c10": (
            [(0, 0.5), (0, 0.52), (0, 0.54), (0, 0.56), (0, 0.585),
             (1, 0.5), (1, 0.52), (1, 0.54), (1, 0.56), (1, 0.585)],
            5,
        ),
    }
    for name, (starts, k) in overlapping.items():
        p.append(_preset(name, u, 2, 1000, starts, k, _NSD20, k1=20))
    stepped = {
        "exp8_inner": [(0.5, 0.5), (0.52, 0.5), (0.54, 0.5), (0.56, 0.5)],
        "exp8_border": [(0.5, 0.0), (0.52, 0.0), (0.54, 0.0), (0.56, 0.0)],
        "exp8_outer": [(0.5, 10.5), (0.52, 10.5), (0.54, 10.5), (0.56, 10.5)],
    }
    for name, starts in stepped.items():
        p.append(_preset(name, u, 2, 1000, starts, 5, _NSD20, mode=SearchMode.STEPPED))
    return {s.name: s for s in p}


PRESETS: dict[str, ScenarioConfig] = _build_presets()

# Reference search-step area for the exp1_remote starting point.
REMOTE_AREA = 124410.21


def get_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def scenario_summary(sc: ScenarioConfig, trace: ConvergenceTrace) -> dict:
    out = trace.summary()
    out.update(
        distribution=format_distribution(sc.distribution),
        dim=sc.dim,
        n=sc.n,
        k=sc.k,
        search_mode=sc.search_mode.value,
        seed=sc.seed,
    )
    if sc.expected:
        final = trace.final_freqs()
        out["expected"] = {str(c): v for c, v in sc.expected.items()}
        out["max_abs_error"] = max(abs(final[c] - v) for c, v in sc.expected.items())
    return out


# -- drift benchmark --------------------------------------------------------------


def run_drift_benchmark(spec: StreamSpec, cfg: WindowConfig) -> ScoreCard:
    stream = generate_stream(spec)
    detections = run_stream(stream.x, stream.y, cfg)
    return score(detections, stream.drift_indices, cfg.window_size)


@dataclass(frozen=True)
class BenchmarkCase:
    kind: StreamKind
    dim: int
    delta: float
    k: int


# The nine synthetic streams, each evaluated with k = 1 and k = 5.
DRIFT_CASES = [
    BenchmarkCase(StreamKind(kind), dim, delta, k)
    for kind, dim, delta in [
        ("linear-shift", 2, 0.03),
        ("linear-shift", 2, 0.02),
        ("linear-shift", 2, 0.01),
        ("linear-shift", 4, 0.03),
        ("linear-shift", 10, 0.03),
        ("linear-rotate", 2, 15.0),
        ("linear-rotate", 2, 10.0),
        ("normal-shift", 2, 0.7),
        ("normal-shift", 2, 0.5),
    ]
    for k in (1, 5)
]


@dataclass
class BenchmarkResult:
    case: BenchmarkCase
    cards: list[ScoreCard]

    @property
    def rates(self) -> list[float]:
        return [c.detection_rate for c in self.cards]

    def as_dict(self) -> dict:
        rates = self.rates
        fa = [c.false_alarms for c in self.cards]
        return {
            "kind": self.case.kind.value,
            "dim": self.case.dim,
            "delta": self.case.delta,
            "k": self.case.k,
            "seeds": len(self.cards),
            "detection_rate_mean": statistics.fmean(rates),
            "detection_rate_sd": statistics.stdev(rates) if len(rates) > 1 else 0.0,
            "false_alarms_mean": statistics.fmean(fa),
            "false_alarms_sd": statistics.stdev(fa) if len(fa) > 1 else 0.0,
        }


def _benchmark_seed(args) -> ScoreCard:
    spec, cfg = args
    return run_drift_benchmark(spec, cfg)


def run_benchmark_case(
    case: BenchmarkCase,
    seeds,
    length: int = 20_000,
    period: int = 2_000,
    window: int = 1_000,
    theta: float = 0.05,
    workers: int = 1,
) -> BenchmarkResult:
    cfg = WindowConfig(window, DetectorConfig(case.k, theta))
    jobs = [(StreamSpec(case.kind, case.dim, case.delta, length, period, seed), cfg) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            cards = list(ex.map(_benchmark_seed, jobs))
    else:
        cards = [_benchmark_seed(j) for j in jobs]
    return BenchmarkResult(case, cards)


# -- efficiency ---------------------------------------------------------------


@dataclass(frozen=True)
class EfficiencyRow:
    dim: int
    window_size: int
    k: int
    wall_time: float

    def as_dict(self) -> dict:
        return {"dim": self.dim, "window_size": self.window_size, "k": self.k, "wall_time": self.wall_time}


def _timing_windows(dim: int, window_size: int, seed: int):
    spec = StreamSpec(StreamKind.LINEAR_SHIFT, dim, 0.0, 2 * window_size, window_size, seed)
    s = gen_linear_shift_stream(spec, make_rng(seed))
    w = window_size
    return s.x[:w], s.y[:w], s.x[w:], s.y[w:]


def run_efficiency(dims, window_sizes, ks, repeats: int = 5, seed: int = 0) -> list[EfficiencyRow]:
    """Median wall time of one ``detect_drift`` call per (dim, window, k).

    Every configuration gets one warm-up call; timed calls then go round-robin
    over configurations so background load is shared evenly between them.
    """
    configs = [(d, w, k) for d in dims for w in window_sizes for k in ks]
    windows = {(d, w): _timing_windows(d, w, seed) for d, w, _ in configs}
    times: dict[tuple, list[float]] = {c: [] for c in configs}
    for d, w, k in configs:
        detect_drift(*windows[d, w], DetectorConfig(k=k))
    for _ in range(repeats):
        for d, w, k in configs:
            cfg = DetectorConfig(k=k)
            t0 = time.perf_counter()
            detect_drift(*windows[d, w], cfg)
            times[d, w, k].append(time.perf_counter() - t0)
    return [EfficiencyRow(d, w, k, statistics.median(times[d, w, k])) for d, w, k in configs]


def write_rows_csv(rows: list[dict], path) -> None:
    if not rows:
        open(path, "w").close()
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_points(text: str) -> list[tuple[float, ...]]:
    """``"0.5,0.5;0.6,0.5"`` -> ``[(0.5, 0.5), (0.6, 0.5)]``."""
    pts = [tuple(float(v) for v in chunk.split(",")) for chunk in text.split(";") if chunk.strip()]
    as_points(pts)
    return pts
