"""Closed-form laws for neighbor-searching volumes and the NSD statistic.

The k-th neighbor-searching volume ``V(k)`` of a homogeneous binomial point
process with ``n`` points and intensity ``lam`` has

    P(V(k) > v) = sum_{j<k} C(n, j) p^j (1 - p)^(n - j),    p = lam * v / n,

which tends to ``Gamma(k, lam)`` (rate ``lam``) as ``n`` grows.  The ratio of two
independent such volumes is ``Beta(k1, k2)`` in that limit, and
``nsd(k1, k2) = I_{1/2}(k1, k2)`` is the probability that the ``k1``-neighbor
volume of one sample is smaller than the ``k2``-neighbor volume of another.

Everything is evaluated in log-space; ``k`` may reach the window size.
"""
from __future__ import annotations

import math
import numbers

import numpy as np
from scipy.special import betaln, gammaln

from .errors import DomainError, NsdParamNonPositive, OverflowGuard

NSD_EXACT_MAX = 10_000

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAXIT = 100_000


def _log_comb(n: int, j: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)


def _check_volume_args(k: int, n: int, lam: float) -> None:
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not lam > 0:
        raise ValueError("intensity must be positive")


def volume_ccdf(k: int, n: int, lam: float, v: float) -> float:
    """``P(V(k) > v)`` for ``V(k) ~ V(k, n, lam)``."""
    _check_volume_args(k, n, lam)
    if v < 0:
        raise DomainError("volume must be nonnegative")
    p = lam * v / n
    if p > 1:
        raise DomainError(f"lam*v/n = {p} exceeds 1")
    if p == 0:
        return 1.0
    if p == 1:
        return 0.0
    lp, lq = math.log(p), math.log1p(-p)
    total = math.fsum(math.exp(_log_comb(n, j) + j * lp + (n - j) * lq) for j in range(k))
    return min(1.0, max(0.0, total))


def volume_cdf(k: int, n: int, lam: float, v: float) -> float:
    return 1.0 - volume_ccdf(k, n, lam, v)


def volume_pdf(k: int, n: int, lam: float, v: float) -> float:
    """Density of ``V(k, n, lam)``: ``binom_pmf(k; n, lam*v/n) * k / v``."""
    _check_volume_args(k, n, lam)
    p = lam * v / n
    if not 0 < p < 1:
        raise DomainError(f"lam*v/n = {p} outside (0, 1)")
    log_pmf = _log_comb(n, k) + k * math.log(p) + (n - k) * math.log1p(-p)
    return math.exp(log_pmf) * k / v


def gamma_pdf(k: int, lam: float, v: float) -> float:
    """``Gamma(k, lam)`` density with shape ``k`` and rate ``lam``."""
    if k < 1 or not lam > 0:
        raise ValueError("need k >= 1 and lam > 0")
    if v < 0:
        raise DomainError("v must be nonnegative")
    if v == 0:
        return lam if k == 1 else 0.0
    return math.exp(-lam * v + k * math.log(lam) + (k - 1) * math.log(v) - math.lgamma(k))


def poisson_kth_neighbor_cdf(k: int, lam: float, v: float) -> float:
    """Probability that the k-th neighbor of a Poisson process lies within volume ``v``.

    Equal to ``P(Poisson(lam * v) >= k)``; in 2-D with a disc of radius ``t``
    pass ``v = pi * t**2``.
    """
    if k < 1 or not lam > 0:
        raise ValueError("need k >= 1 and lam > 0")
    if v < 0:
        raise DomainError("v must be nonnegative")
    x = lam * v
    if x == 0:
        return 0.0
    lx = math.log(x)

    def term(j: int) -> float:
        return math.exp(-x + j * lx - math.lgamma(j + 1))

    if x < k:
        # Upper tail directly; terms decrease geometrically past j = k > x.
        total, j = 0.0, k
        while True:
            t = term(j)
            total += t
            if t <= 1e-18 * total:
                break
            j += 1
        return min(1.0, total)
    return max(0.0, 1.0 - math.fsum(term(j) for j in range(k)))


def _check_nsd_args(k1, k2) -> tuple[int, int]:
    for k in (k1, k2):
        if isinstance(k, bool) or not isinstance(k, numbers.Integral):
            raise NsdParamNonPositive(f"NSD arguments must be integers, got {k!r}")
        if k < 1:
            raise NsdParamNonPositive(f"NSD arguments must be positive, got {k}")
    return int(k1), int(k2)


def _betai_half_cf(a: int, b: int) -> float:
    """``I_{1/2}(a, b)`` by Lentz's continued fraction; fast when ``a > b``."""
    x = 0.5
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    else:
        raise ArithmeticError(f"continued fraction did not converge for a={a}, b={b}")
    log_front = (a + b) * math.log(x) - float(betaln(a, b)) - math.log(a)
    return math.exp(log_front) * h


def nsd(k1: int, k2: int) -> float:
    """Neighbor-searching discrepancy ``I_{1/2}(k1, k2)``, the Beta(k1, k2) CDF at 0.5."""
    a, b = _check_nsd_args(k1, k2)
    if a == b:
        return 0.5
    # The fraction converges quickly for x < (a+1)/(a+b+2), i.e. a > b at x = 1/2,
    # and then yields the small tail directly.
    if a > b:
        return _betai_half_cf(a, b)
    return 1.0 - _betai_half_cf(b, a)


def nsd_exact(k1: int, k2: int) -> float:
    """``I_{1/2}(a, b) = 2^-(a+b-1) * sum_{j=a}^{a+b-1} C(a+b-1, j)`` in log-space."""
    a, b = _check_nsd_args(k1, k2)
    if a + b > NSD_EXACT_MAX:
        raise OverflowGuard(f"k1 + k2 = {a + b} exceeds {NSD_EXACT_MAX}")
    m = a + b - 1
    j = np.arange(a, m + 1)
    log_terms = gammaln(m + 1) - gammaln(j + 1) - gammaln(m - j + 1)
    top = log_terms.max()
    log_sum = top + math.log(float(np.exp(log_terms - top).sum()))
    return math.exp(log_sum - m * math.log(2.0))
