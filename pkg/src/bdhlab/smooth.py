"""Smooth-number counts, the saddle point of the Euler product, and the
variance of the smooth numbers in progressions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._accum import Accumulator
from .sequences import generate
from .sieves import FactorTable, build_factor_table
from .variance import moduli, variance_direct


def _need(t: FactorTable, x: float) -> int:
    n = math.floor(x)
    if n > t.limit:
        raise ValueError(f"x={x} exceeds the sieve limit {t.limit}")
    return n


def _smooth_mask(t: FactorTable, n: int, y: float) -> np.ndarray:
    """mask[m] for 0 <= m <= n; mask[0] is False."""
    m = t.lpf[: n + 1] <= y
    m[0] = False
    return m


def psi(x: float, y: float, t: FactorTable) -> int:
    """Number of y-smooth integers n <= x."""
    n = _need(t, x)
    if n < 1:
        return 0
    return int(np.count_nonzero(t.lpf[1 : n + 1] <= y))


def psi_coprime(x: float, y: float, q: int, t: FactorTable) -> int:
    """y-smooth n <= x with (n, q) = 1."""
    n = _need(t, x)
    if n < 1:
        return 0
    m = np.arange(1, n + 1)
    ok = (t.lpf[1 : n + 1] <= y) & (np.gcd(m, q) == 1)
    return int(np.count_nonzero(ok))


def psi_progression(x: float, y: float, q: int, a: int, t: FactorTable) -> int:
    """y-smooth n <= x with n = a (mod q)."""
    if not 1 <= a <= q:
        raise ValueError("need 1 <= a <= q")
    n = _need(t, x)
    start = a % q or q
    if start > n:
        return 0
    return int(np.count_nonzero(t.lpf[start : n + 1 : q] <= y))


def primes_upto(y: float) -> np.ndarray:
    if y < 2:
        return np.zeros(0, dtype=np.int64)
    return build_factor_table(math.floor(y)).primes.astype(np.int64)


def zeta_partial(s: float, y: float, primes=None) -> float:
    """prod_{p <= y} (1 - p^{-s})^{-1}."""
    if not s > 0:
        raise ValueError("s must be positive")
    p = primes_upto(y) if primes is None else np.asarray(primes)
    p = p[p <= y].astype(np.float64)
    return math.exp(-math.fsum(np.log1p(-np.power(p, -s)).tolist()))


def _log_zeta(s: float, p: np.ndarray) -> float:
    return -math.fsum(np.log1p(-np.power(p, -s)).tolist())


class SaddlePoint(NamedTuple):
    alpha: float
    approx: float
    residual: float


def saddle_point(x: float, y: float, primes=None, rtol: float = 1e-10) -> SaddlePoint:
    """Root alpha > 0 of sum_{p <= y} log p / (p^alpha - 1) = log x, by bisection.

    ``approx`` is the first-order form 1 - log(u log(u + 1)) / log y.
    """
    if not 2 <= y <= x:
        raise ValueError("need 2 <= y <= x")
    p = primes_upto(y) if primes is None else np.asarray(primes)
    p = p[p <= y].astype(np.float64)
    lp = np.log(p)
    target = math.log(x)

    def f(a):
        return math.fsum((lp / np.expm1(a * lp)).tolist()) - target

    lo, hi = 1 / target, 2.0
    for _ in range(200):
        if f(lo) > 0:
            break
        lo /= 2
    else:
        raise RuntimeError("saddle point bracket failed at the lower end")
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 2
    else:
        raise RuntimeError("saddle point bracket failed at the upper end")
    tol = rtol * target
    mid = (lo + hi) / 2
    for _ in range(400):
        mid = (lo + hi) / 2
        v = f(mid)
        if abs(v) <= tol or hi - lo < 1e-16 * hi:
            break
        if v > 0:
            lo = mid
        else:
            hi = mid
    u = math.log(x) / math.log(y)
    approx = 1 - math.log(u * math.log(u + 1)) / math.log(y)
    return SaddlePoint(mid, approx, f(mid))


def ht_estimate(x: float, y: float, primes=None) -> float:
    """x^a zeta(a, y) / (a sqrt(2 pi (1 + log x / y) log x log y)) at the saddle point a."""
    p = primes_upto(y) if primes is None else np.asarray(primes)
    a = saddle_point(x, y, p).alpha
    lx, ly = math.log(x), math.log(y)
    pf = p[p <= y].astype(np.float64)
    log_val = (a * lx + _log_zeta(a, pf) - math.log(a)
               - 0.5 * math.log(2 * math.pi * (1 + lx / y) * lx * ly))
    return math.exp(log_val)


def smooth_variance(x: float, y: float, Q: float, t: FactorTable | None = None,
                    method: str = "structured"):
    """V(S(y), x, Q) on the exact path.

    ``generic`` buckets the indicator sequence directly.  ``structured`` uses
    Psi(x,y;q,a) = Psi(x/h,y;q/h,a/h) for y-smooth h = (a,q): for each q and
    each smooth divisor h, the smooth m <= x/h are binned modulo q/h and the
    classes coprime to q/h are compared with their mean.
    """
    need = max(math.floor(x), math.floor(Q), 2)
    if t is None or t.limit < need:
        t = build_factor_table(need)
    if method == "generic":
        return variance_direct(generate("smooth_indicator", x, t, y=y), Q, t, exact=True)
    if method != "structured":
        raise ValueError(f"unknown method {method!r}")
    n = math.floor(x)
    smooth = np.flatnonzero(_smooth_mask(t, n, y))
    phi = t.phi_table
    lpf = t.lpf
    acc = Accumulator(True)
    for q in moduli(Q):
        for h in t.divisors(q):
            if lpf[h] > y or h > n:
                continue
            qq = q // h
            m = smooth[: np.searchsorted(smooth, n // h, side="right")]
            B = np.bincount(m % qq, minlength=qq)
            r = np.arange(qq)
            co = B[np.gcd(r, qq) == 1]
            s = int(co.sum())
            acc.add(int(np.dot(co, co)))
            acc.add(-s * s, int(phi[qq]))
    return acc.result()


@dataclass
class SmoothContext:
    x: float
    y: float
    u: float
    alpha: float
    alpha_approx: float
    zeta_alpha_y: float
    psi_exact: int | None


def smooth_context(x: float, y: float, t: FactorTable | None = None) -> SmoothContext:
    """Saddle point data for (x, y) plus the exact count when x is within the sieve."""
    if y >= x:
        u = 1.0
        sp = saddle_point(x, x)
        yy = x
    else:
        u = math.log(x) / math.log(y)
        sp = saddle_point(x, y)
        yy = y
    z = zeta_partial(sp.alpha, yy)
    count = None
    if t is not None and t.limit >= math.floor(x):
        count = psi(x, y, t)
    return SmoothContext(x, y, u, sp.alpha, sp.approx, z, count)
