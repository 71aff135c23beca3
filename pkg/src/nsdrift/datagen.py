"""Seeded sample and stream generators.

Randomness comes from numpy's Philox-4x64 counter-based bit generator.  A run
is identified by a master seed; replicate ``i`` draws from the independent
substream ``SeedSequence([seed, i])``, so replicates can be produced in any
order or in parallel with identical results.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError

RNG_ALGORITHM = "numpy Philox-4x64 via SeedSequence"


def make_rng(seed: int, *substream: int) -> np.random.Generator:
    """Generator for ``seed`` and an optional substream key (e.g. replicate index)."""
    if seed < 0 or any(s < 0 for s in substream):
        raise ValueError("seeds must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, substream)])))


# -- point distributions ----------------------------------------------------


def gen_uniform_cube(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return rng.random((n, d))


def gen_normal(n: int, d: int, mu: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if n < 1 or d < 1 or not sigma > 0:
        raise ValueError("need n, d >= 1 and sigma > 0")
    return rng.normal(mu, sigma, size=(n, d))


def gen_gamma(n: int, d: int, alpha: float, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Gamma coordinates with shape ``alpha`` and *scale* ``beta`` (mean ``alpha*beta``)."""
    if n < 1 or d < 1 or not (alpha > 0 and beta > 0):
        raise ValueError("need n, d >= 1 and positive alpha, beta")
    return rng.gamma(alpha, beta, size=(n, d))


def gen_poisson_trivariate(n: int, lam: float, rng: np.random.Generator) -> np.ndarray:
    """Bivariate Poisson by trivariate reduction: ``(A + C, B + C)``, ``A, B, C ~ Poisson(lam/2)``."""
    if n < 1 or not lam > 0:
        raise ValueError("need n >= 1 and lam > 0")
    abc = rng.poisson(0.5 * lam, size=(n, 3))
    return (abc[:, :2] + abc[:, 2:3]).astype(float)


@dataclass(frozen=True)
class UniformCube:
    def sample(self, n, d, rng):
        return gen_uniform_cube(n, d, rng)


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0

    def sample(self, n, d, rng):
        return gen_normal(n, d, self.mu, self.sigma, rng)


@dataclass(frozen=True)
class Gamma:
    alpha: float
    beta: float

    def sample(self, n, d, rng):
        return gen_gamma(n, d, self.alpha, self.beta, rng)


@dataclass(frozen=True)
class PoissonTrivariate:
    lam: float

    def sample(self, n, d, rng):
        if d != 2:
            raise ValueError("the trivariate-reduction Poisson generator is 2-D")
        return gen_poisson_trivariate(n, self.lam, rng)


Distribution = UniformCube | Normal | Gamma | PoissonTrivariate


def parse_distribution(text: str) -> Distribution:
    """Parse ``uniform``, ``normal(mu,sigma)``, ``gamma(alpha,beta)`` or ``poisson(lam)``."""
    t = text.strip().lower().replace(" ", "")
    name, _, rest = t.partition("(")
    args = [float(a) for a in rest.rstrip(")").split(",") if a] if rest else []
    try:
        if name in ("uniform", "uniformcube"):
            if args:
                raise ValueError
            return UniformCube()
        if name == "normal":
            return Normal(*args)
        if name == "gamma":
            return Gamma(*args)
        if name in ("poisson", "poissontrivariate"):
            return PoissonTrivariate(*args)
    except (TypeError, ValueError):
        pass
    raise ValueError(f"cannot parse distribution {text!r}")


def format_distribution(dist: Distribution) -> str:
    if isinstance(dist, UniformCube):
        return "uniform"
    if isinstance(dist, Normal):
        return f"normal({dist.mu:g},{dist.sigma:g})"
    if isinstance(dist, Gamma):
        return f"gamma({dist.alpha:g},{dist.beta:g})"
    return f"poisson({dist.lam:g})"


# -- drift streams ----------------------------------------------------------


class StreamKind(str, Enum):
    LINEAR_SHIFT = "linear-shift"
    LINEAR_ROTATE = "linear-rotate"
    NORMAL_SHIFT = "normal-shift"


# Class-1 mean of the normal-shift stream before drift.
NORMAL_SHIFT_BASE = 4.0
ROTATE_BASE_DEG = 45.0


@dataclass(frozen=True)
class StreamSpec:
    kind: StreamKind
    dim: int
    delta: float
    length: int
    drift_period: int
    seed: int = 0
    # Only used by normal-shift streams: class-1 mean per coordinate before drift.
    normal_base: float = NORMAL_SHIFT_BASE

    def __post_init__(self):
        object.__setattr__(self, "kind", StreamKind(self.kind))
        if self.dim < 1 or self.length < 1 or self.drift_period < 1:
            raise ValueError("dim, length and drift_period must be positive")
        if self.length % self.drift_period:
            raise ValueError("length must be a multiple of drift_period")
        if self.delta < 0:
            raise DomainError("delta must be nonnegative")
        if self.kind is StreamKind.LINEAR_ROTATE:
            if self.dim != 2:
                raise ValueError("linear-rotate streams are 2-D")
            if self.delta >= 45:
                raise DomainError("rotation must be below 45 degrees")
        if self.kind is StreamKind.NORMAL_SHIFT and self.dim != 2:
            raise ValueError("normal-shift streams are 2-D")

    @property
    def n_drifts(self) -> int:
        return 0 if self.delta == 0 else self.length // self.drift_period - 1


@dataclass
class LabeledStream:
    x: np.ndarray
    y: np.ndarray
    drift_indices: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.y)


def concept_of(spec: StreamSpec) -> np.ndarray:
    """0 for the base concept, 1 for the drifted one, alternating every ``drift_period``."""
    return (np.arange(spec.length) // spec.drift_period) % 2


def drift_indices(spec: StreamSpec) -> list[int]:
    if spec.delta == 0:
        return []
    return [spec.drift_period * i for i in range(1, spec.length // spec.drift_period)]


def linear_shift_offset(dim: int, delta: float) -> float:
    """Threshold change ``d * sqrt(delta**2 / d)`` of the coordinate sum."""
    return dim * math.sqrt(delta * delta / dim)


def gen_linear_shift_stream(spec: StreamSpec, rng: np.random.Generator) -> LabeledStream:
    if spec.kind is not StreamKind.LINEAR_SHIFT:
        raise ValueError("spec is not a linear-shift stream")
    x = rng.random((spec.length, spec.dim))
    base = spec.dim / 2.0
    threshold = np.where(concept_of(spec) == 1, base + linear_shift_offset(spec.dim, spec.delta), base)
    y = (x.sum(axis=1) > threshold).astype(np.int64)
    return LabeledStream(x, y, drift_indices(spec))


def gen_linear_rotate_stream(spec: StreamSpec, rng: np.random.Generator) -> LabeledStream:
    if spec.kind is not StreamKind.LINEAR_ROTATE:
        raise ValueError("spec is not a linear-rotate stream")
    x = rng.random((spec.length, 2))
    slope_a = 1.0
    slope_b = math.tan(math.pi * (ROTATE_BASE_DEG + spec.delta) / 180.0)
    slope = np.where(concept_of(spec) == 1, slope_b, slope_a)
    y = (x[:, 1] > x[:, 0] * slope).astype(np.int64)
    return LabeledStream(x, y, drift_indices(spec))


def gen_normal_shift_stream(spec: StreamSpec, rng: np.random.Generator) -> LabeledStream:
    if spec.kind is not StreamKind.NORMAL_SHIFT:
        raise ValueError("spec is not a normal-shift stream")
    y = rng.integers(0, 2, size=spec.length)
    x = rng.normal(0.0, 1.0, size=(spec.length, 2))
    mean1 = np.where(concept_of(spec) == 1, spec.normal_base + spec.delta, spec.normal_base)
    x += (y * mean1)[:, None]
    return LabeledStream(x, y.astype(np.int64), drift_indices(spec))


_STREAM_GENERATORS = {
    StreamKind.LINEAR_SHIFT: gen_linear_shift_stream,
    StreamKind.LINEAR_ROTATE: gen_linear_rotate_stream,
    StreamKind.NORMAL_SHIFT: gen_normal_shift_stream,
}


def generate_stream(spec: StreamSpec) -> LabeledStream:
    return _STREAM_GENERATORS[spec.kind](spec, make_rng(spec.seed))


# -- CSV interchange ----------------------------------------------------------


def write_stream_csv(stream: LabeledStream, path, drifts_path=None) -> None:
    """Write ``x0,...,x{d-1},label`` rows and a sidecar of drift indices."""
    path = Path(path)
    d = stream.x.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(",".join([f"x{i}" for i in range(d)] + ["label"]) + "\n")
        for row, label in zip(stream.x, stream.y):
            fh.write(",".join(f"{v:.17g}" for v in row) + f",{int(label)}\n")
    drifts_path = Path(drifts_path) if drifts_path else default_drifts_path(path)
    with open(drifts_path, "w") as fh:
        fh.writelines(f"{i}\n" for i in stream.drift_indices)


def default_drifts_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".drifts")


def read_stream_csv(path) -> LabeledStream:
    """Read a stream written by :func:`write_stream_csv` (sidecar optional)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError("empty file", line=1)
        header = [h.strip() for h in header]
        d = len(header) - 1
        expected = [f"x{i}" for i in range(d)] + ["label"]
        if d < 1 or header != expected:
            raise DataFormatError(f"header must be x0,...,x{{d-1}},label, got {','.join(header)}", line=1)
        xs, ys = [], []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != d + 1:
                raise DataFormatError(f"expected {d + 1} fields, got {len(row)}", line=line)
            try:
                coords = [float(v) for v in row[:d]]
                label = int(row[d])
            except ValueError as exc:
                raise DataFormatError(str(exc), line=line) from None
            if label not in (0, 1) or not all(math.isfinite(c) for c in coords):
                raise DataFormatError("label must be 0/1 and coordinates finite", line=line)
            xs.append(coords)
            ys.append(label)
    x = np.array(xs, dtype=float).reshape(len(xs), d)
    sidecar = default_drifts_path(path)
    drifts = []
    if sidecar.exists():
        drifts = [int(t) for t in sidecar.read_text().split()]
    return LabeledStream(x, np.array(ys, dtype=np.int64), drifts)
