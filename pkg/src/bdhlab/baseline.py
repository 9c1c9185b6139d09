"""Variance of the full set of integers: the fractional-part sum, the closed-form
integral it approaches, and the three-term identity for multiples of a prime."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .sequences import from_weights, generate
from .sieves import FactorTable, build_factor_table
from .variance import as_float, direct_terms, moduli

SERIES_TERMS = 24
DIRECT_PIECES = 64
_DPS = 40


def bernoulli_sum(x: float, Q: float) -> float:
    """Sum over q in (Q/2, Q] of q {x/q} (1 - {x/q})."""
    q = np.arange(math.floor(Q / 2) + 1, math.floor(Q) + 1, dtype=np.float64)
    if not len(q):
        return 0.0
    if float(x).is_integer():
        m = np.mod(int(x), q.astype(np.int64)).astype(np.float64)
    else:
        m = x - q * np.floor(x / q)
    return math.fsum((m * (q - m) / q).tolist())


def _antiderivative(n: int, v):
    """Primitive of (v - n)(n + 1 - v) / v^3."""
    return -mpmath.log(v) - (2 * n + 1) / v + mpmath.mpf(n) * (n + 1) / (2 * v * v)


def _full_pieces(lo: int, hi: int):
    """Integral over [lo, hi] for integers 1 <= lo <= hi.

    Each unit piece equals sum_{k>=1} 4k/(2k+1) (2n+1)^{-(2k+1)}; across many
    pieces the inner sums over n are Hurwitz zeta differences.
    """
    if hi <= lo:
        return mpmath.mpf(0)
    total = mpmath.mpf(0)
    if hi - lo <= DIRECT_PIECES:
        for n in range(lo, hi):
            w = mpmath.mpf(1) / (2 * n + 1)
            w2 = w * w
            term = w2 * w
            for k in range(1, SERIES_TERMS + 1):
                total += mpmath.mpf(4 * k) / (2 * k + 1) * term
                term *= w2
        return total
    for k in range(1, SERIES_TERMS + 1):
        s = 2 * k + 1
        power_sum = mpmath.power(2, -s) * (mpmath.zeta(s, lo + mpmath.mpf(1) / 2)
                                           - mpmath.zeta(s, hi + mpmath.mpf(1) / 2))
        total += mpmath.mpf(4 * k) / (2 * k + 1) * power_sum
    return total


def unit_integral(a: float, b: float) -> float:
    """Integral of {v}(1 - {v}) v^{-3} over [a, b], 0 < a <= b."""
    if not a > 0:
        raise ValueError("integration bounds must be positive")
    if b < a:
        raise ValueError("need a <= b")
    with mpmath.workdps(_DPS):
        A, B = mpmath.mpf(a), mpmath.mpf(b)
        n_lo, n_hi = math.ceil(a), math.floor(b)
        if n_hi < n_lo:
            n = n_hi
            return float(_antiderivative(n, B) - _antiderivative(n, A))
        total = mpmath.mpf(0)
        if A < n_lo:
            total += _antiderivative(n_lo - 1, mpmath.mpf(n_lo)) - _antiderivative(n_lo - 1, A)
        total += _full_pieces(n_lo, n_hi)
        if B > n_hi:
            total += _antiderivative(n_hi, B) - _antiderivative(n_hi, mpmath.mpf(n_hi))
        return float(total)


def fractional_integral(x: float, Q: float) -> float:
    """x^2 times the integral of {v}(1 - {v}) / v^3 over [x/Q, 2x/Q]."""
    if not (x > 0 and Q > 0):
        raise ValueError("x and Q must be positive")
    return x * x * unit_integral(x / Q, 2 * x / Q)


def integral_asymptotic(x: float, Q: float) -> float:
    """Large-x/Q limit of ``fractional_integral``: Q^2/16."""
    return Q * Q / 16


def integers_variance(x: float, Q: float, t: FactorTable | None = None, workers: int = 1):
    seq = generate("integers", x)
    t = t if t is not None and t.limit >= max(seq.n, math.floor(Q)) else build_factor_table(max(seq.n, math.floor(Q), 2))
    return direct_terms(seq, moduli(Q), t, True, workers).result()


def dilate_advisory(p: int, x: float) -> bool:
    """True when p lies in the range p <= sqrt(x/2) of the usual statement."""
    return p * p <= x / 2


def dilate_identity_check(p: int, x: float, Q: float, t: FactorTable | None = None, workers: int = 1):
    """LHS - RHS of V(1_{p|n}, x, Q) = V(N, x/p, Q) - sum_{p|q} V_q(N, x/p) + V(N, x/p, Q/p).

    ``V_q`` is the single-modulus contribution to the variance.  Every term is
    evaluated by direct bucketing, exactly, so the result should be 0.
    """
    if p < 2 or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
        raise ValueError(f"p={p} is not prime")
    if p > x / 2:
        raise ValueError("need p <= x/2 so that x/p >= 2")
    if not (Q * Q > 2 * x and Q <= x):
        raise ValueError("need sqrt(2x) < Q <= x")
    need = max(math.floor(x), math.floor(Q), 2)
    if t is None or t.limit < need:
        t = build_factor_table(need)
    A = generate("multiples_indicator", x, t, p=p)
    N = from_weights(np.ones(math.floor(x / p), dtype=np.int64), x=x / p, kind="integers")
    lhs = direct_terms(A, moduli(Q), t, True, workers).result()
    first = direct_terms(N, moduli(Q), t, True, workers).result()
    middle = direct_terms(N, [q for q in moduli(Q) if q % p == 0], t, True, workers).result()
    last = direct_terms(N, moduli(Q / p), t, True, workers).result()
    return lhs - (first - middle + last)


@dataclass
class BaselineReport:
    x: float
    Q: float
    v_exact: object
    bernoulli_sum: float
    integral_value: float
    asymptotic_value: float
    diff_ratios: dict = field(default_factory=dict)


def error_scale(x: float, Q: float) -> float:
    return x + Q * math.log(Q) ** 2


def baseline_report(x: float, Q: float, t: FactorTable | None = None, workers: int = 1) -> BaselineReport:
    v = integers_variance(x, Q, t, workers)
    b = bernoulli_sum(x, Q)
    i = fractional_integral(x, Q)
    a = integral_asymptotic(x, Q)
    scale = error_scale(x, Q)
    ratios = {
        "variance_vs_sum": abs(as_float(v) - b) / scale,
        "sum_vs_integral": abs(b - i) / scale,
        "integral_over_asymptotic": i / a,
    }
    return BaselineReport(x, Q, v, b, i, a, ratios)
