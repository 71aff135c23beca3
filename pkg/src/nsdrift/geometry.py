"""Euclidean point geometry: distances, brute-force kNN, union-of-balls counts.

Point sets are ``(n, d)`` float arrays; single points are length-``d`` vectors.
All distances go through :func:`pairwise_distances` so that single-query and
batched paths produce bit-identical values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionMismatch, EmptySet, KTooLarge

# Upper bound on distance-matrix elements materialised at once.
_CHUNK_ELEMENTS = 1 << 22
_SQUARE_SAFE = (1e-150, 1e150)


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("coordinates must be finite")
    return v


def as_points(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to an ``(n, d)`` float array, checking ``d`` against ``dim``."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 1:
        # An empty list is an empty set of unknown dimension.
        p = p.reshape(0, dim or 0) if p.size == 0 else p.reshape(-1, 1)
    if p.ndim != 2:
        raise DimensionMismatch(f"expected an (n, d) array, got shape {p.shape}")
    if dim is not None and p.shape[0] and p.shape[1] != dim:
        raise DimensionMismatch(f"points have dim {p.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(p)):
        raise ValueError("coordinates must be finite")
    return p


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = cdist(a, b, metric="euclidean")
    # Squared differences under- or overflow outside this range, so those
    # entries are recomputed with the differences scaled to unit size first.
    r, c = np.nonzero((d < _SQUARE_SAFE[0]) | (d > _SQUARE_SAFE[1]))
    if r.size:
        diff = a[r] - b[c]
        scale = np.abs(diff).max(axis=1)
        fixed = np.zeros(r.size)
        nz = scale > 0
        fixed[nz] = scale[nz] * np.sqrt(np.square(diff[nz] / scale[nz, None]).sum(axis=1))
        d[r, c] = fixed
    return d


def euclidean_distance(a, b) -> float:
    a, b = as_vector(a), as_vector(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dim {a.size} vs {b.size}")
    return float(pairwise_distances(a[None, :], b[None, :])[0, 0])


@dataclass(frozen=True)
class NeighborResult:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def _row_chunks(n_rows: int, n_cols: int) -> Iterable[slice]:
    step = max(1, _CHUNK_ELEMENTS // max(1, n_cols))
    for start in range(0, n_rows, step):
        yield slice(start, min(n_rows, start + step))


def _smallest_k(dist: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` smallest entries per row, ordered by (distance, index)."""
    n_rows, n_cols = dist.shape
    if k == n_cols:
        return np.argsort(dist, axis=1, kind="stable")
    if k == 1:
        return np.argmin(dist, axis=1)[:, None]
    bs = max(8, math.isqrt(n_cols // k))
    nb = n_cols // bs
    if nb + (nb * bs < n_cols) <= k:
        return np.argsort(dist, axis=1, kind="stable")[:, :k]
    # Block j holds the strided columns j, j + nb, j + 2*nb, ...; leftover columns
    # form one extra block.  Every entry <= the kth smallest lies in a block whose
    # minimum is among the k smallest block minima, so only those blocks are searched.
    full = nb * bs
    mins = dist[:, :full].reshape(n_rows, bs, nb).min(axis=1)
    members = np.arange(nb)[:, None] + nb * np.arange(bs)[None, :]
    if full < n_cols:
        mins = np.concatenate([mins, dist[:, full:].min(axis=1, keepdims=True)], axis=1)
        tail = full + np.arange(bs)
        members = np.vstack([members, np.where(tail < n_cols, tail, n_cols)])
    blocks = np.argpartition(mins, k - 1, axis=1)[:, :k]
    tau = np.take_along_axis(mins, blocks, axis=1).max(axis=1)
    cols = members[blocks].reshape(n_rows, k * bs)
    valid = cols < n_cols
    cols = np.where(valid, cols, n_cols - 1)
    vals = np.where(valid, np.take_along_axis(dist, cols, axis=1), np.inf)
    part = np.argpartition(vals, k - 1, axis=1)[:, :k]
    pv = np.take_along_axis(vals, part, axis=1)
    pc = np.take_along_axis(cols, part, axis=1)
    out = np.take_along_axis(pc, np.lexsort((pc, pv), axis=1), axis=1)
    # Ties at the kth value, or among block minima at tau, need a full stable sort.
    tied = ((mins <= tau[:, None]).sum(axis=1) > k) | ((vals <= pv.max(axis=1)[:, None]).sum(axis=1) > k)
    for r in np.flatnonzero(tied):
        out[r] = np.argsort(dist[r], kind="stable")[:k]
    return out


def knn_batch(queries, points, k: int) -> tuple[np.ndarray, np.ndarray]:
    """kNN for many queries at once; returns ``(indices, distances)`` of shape ``(m, k)``."""
    points = as_points(points)
    queries = as_points(queries)
    n = points.shape[0]
    if n == 0:
        raise EmptySet("no points to search")
    if queries.shape[0] and queries.shape[1] != points.shape[1]:
        raise DimensionMismatch(f"query dim {queries.shape[1]} vs points dim {points.shape[1]}")
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise KTooLarge(f"k={k} exceeds {n} points")
    m = queries.shape[0]
    idx = np.empty((m, k), dtype=np.intp)
    dst = np.empty((m, k), dtype=float)
    for rows in _row_chunks(m, n):
        d = pairwise_distances(queries[rows], points)
        sel = _smallest_k(d, k)
        idx[rows] = sel
        dst[rows] = np.take_along_axis(d, sel, axis=1)
    return idx, dst


def knn(query, points, k: int) -> NeighborResult:
    """The ``k`` nearest points to ``query``; ties go to the lower index."""
    q = as_vector(query)
    idx, dst = knn_batch(q[None, :], points, k)
    return NeighborResult(idx[0], dst[0])


def knn_excluding(query, points, k: int, excluded=()) -> NeighborResult:
    """Like :func:`knn` but skipping the point indices in ``excluded``."""
    q = as_vector(query)
    points = as_points(points)
    n = points.shape[0]
    if n == 0:
        raise EmptySet("no points to search")
    if q.size != points.shape[1]:
        raise DimensionMismatch(f"query dim {q.size} vs points dim {points.shape[1]}")
    mask = np.ones(n, dtype=bool)
    excl = np.fromiter((int(i) for i in excluded), dtype=np.intp)
    mask[excl] = False
    keep = np.flatnonzero(mask)
    if k > keep.size:
        raise KTooLarge(f"k={k} exceeds {keep.size} non-excluded points")
    d = pairwise_distances(q[None, :], points[keep])
    sel = _smallest_k(d, k)[0]
    return NeighborResult(keep[sel], d[0, sel])


def within_union_mask(origins, radii, targets) -> np.ndarray:
    """Boolean mask over ``targets``: inside at least one open ball ``B(origin_i, r_i)``."""
    origins = as_points(origins)
    targets = as_points(targets)
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if radii.size != origins.shape[0]:
        raise DimensionMismatch(f"{origins.shape[0]} origins but {radii.size} radii")
    if np.any(radii < 0):
        raise ValueError("radii must be nonnegative")
    covered = np.zeros(targets.shape[0], dtype=bool)
    if targets.shape[0] == 0 or origins.shape[0] == 0:
        return covered
    if targets.shape[1] != origins.shape[1]:
        raise DimensionMismatch(f"target dim {targets.shape[1]} vs origin dim {origins.shape[1]}")
    for rows in _row_chunks(origins.shape[0], targets.shape[0]):
        d = pairwise_distances(origins[rows], targets)
        covered |= (d < radii[rows, None]).any(axis=0)
    return covered


def count_within_union(origins, radii, targets) -> int:
    """Number of distinct targets strictly inside some ball ``B(origin_i, r_i)``."""
    return int(within_union_mask(origins, radii, targets).sum())


def ball_volume(d: int, r: float) -> float:
    """Volume of a ``d``-ball of radius ``r``."""
    if d < 1:
        raise ValueError("d must be positive")
    if r < 0:
        raise ValueError("r must be nonnegative")
    log_unit = 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)
    try:
        return math.exp(log_unit) * r**d
    except OverflowError:
        return math.inf
