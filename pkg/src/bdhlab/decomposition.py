"""The variance regrouped by pair difference, and the empirical constants of the
coefficient bounds.

With ``b_n = a_{nh}`` the off-diagonal part of V is written as

    Q/2 * sum a_n^2 + 2 * hl_term - 2 * tail_term + residual

where ``hl_term`` collects, for every small ``h <= 2x/Q``, the pairs
``n2 < n1 <= x/h`` banded by ``lQ/2 < n1 - n2 <= (l+1)Q/2`` and weighted by
``C_{n1 n2, l+1, Q/h}``, and ``tail_term`` is the second gcd-class sum
restricted to ``2x/Q < h <= Q``.  The residual is whatever is left, by
subtraction from an exact variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._accum import Accumulator
from .sequences import WeightedSequence
from .sieves import FactorTable, build_factor_table, tau
from .variance import (
    _coprime_mask,
    _run_chunks,
    _use_exact,
    correlate,
    in_theorem_range,
    variance_direct,
)


@dataclass(frozen=True)
class PhiRecipInterval:
    """Integers d in an interval with ``(d, coprime_to) = 1``."""

    lo: float
    hi: float
    include_lo: bool
    include_hi: bool
    coprime_to: int = 1

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval needs lo <= hi")

    def integer_range(self) -> range:
        first = math.ceil(self.lo) if self.include_lo else math.floor(self.lo) + 1
        last = math.floor(self.hi) if self.include_hi else math.ceil(self.hi) - 1
        return range(max(first, 1), last + 1)


def phi_recip_sum(interval: PhiRecipInterval, t: FactorTable, exact: bool = False):
    """Sum of ``1/phi(d)`` over the interval's admissible integers."""
    rng = interval.integer_range()
    if len(rng) == 0:
        return Fraction(0) if exact else 0.0
    if rng.stop - 1 > t.limit:
        raise ValueError(f"interval reaches {rng.stop - 1}, table limit is {t.limit}")
    d = np.arange(rng.start, rng.stop)
    if interval.coprime_to != 1:
        d = d[np.gcd(d, interval.coprime_to) == 1]
    phis = t.phi_table[d]
    if exact:
        vals, counts = np.unique(phis, return_counts=True)
        acc = Accumulator(True)
        for v, c in zip(vals.tolist(), counts.tolist()):
            acc.add(c, v)
        return acc.result()
    return math.fsum((1.0 / phis).tolist())


def c_coefficient(m: int, l: float, z: float, t: FactorTable, exact: bool = False):
    """``C_{m,l,z}``: the ``[l/2, l)`` sum minus the ``(z/2, z]`` sum, both over d coprime to m."""
    if not (l > 0 and z > 0):
        raise ValueError("l and z must be positive")
    first = phi_recip_sum(PhiRecipInterval(l / 2, l, True, False, m), t, exact)
    second = phi_recip_sum(PhiRecipInterval(z / 2, z, False, True, m), t, exact)
    return first - second


def lemma1_ratio(m: int, l: float, z: float, t: FactorTable) -> float:
    """``|C_{m,l,z}| / min(1, tau(m) log(l+2)/(l+2))``."""
    if z < l:
        raise ValueError("need z >= l")
    c = abs(c_coefficient(m, l, z, t))
    return c / min(1.0, tau(m, t) * math.log(l + 2) / (l + 2))


def lemma2_ratio(m: int, n: int, l: float, z: float, t: FactorTable) -> float:
    """``|C_{mn,l,z} - C_{m,l,z}| / sum_{p | n} 1/p``; 0 when n = 1."""
    if n == 1:
        return 0.0
    diff = abs(c_coefficient(m * n, l, z, t, exact=True) - c_coefficient(m, l, z, t, exact=True))
    primes = [p for p, _ in t.factorize(n)]
    return float(diff / sum(Fraction(1, p) for p in primes))


@dataclass
class KeyDecomposition:
    x: float
    Q: float
    diagonal: object
    hl_term: object
    tail_term: object
    residual: object
    v_exact: object
    exact: bool

    def reassembled(self):
        return self.diagonal + 2 * self.hl_term - 2 * self.tail_term + self.residual


def _band_top(l: int, Q: float) -> int:
    """Largest integer difference D with D <= (l+1)Q/2."""
    return math.floor((l + 1) * Q / 2)


def _offdiag(v: np.ndarray, exact: bool):
    s = v.sum()
    s2 = (v * v).sum()
    if exact:
        s, s2 = int(s), int(s2)
        return (s * s - s2) // 2
    return (float(s) ** 2 - float(s2)) / 2


class _Masks:
    """Coprimality masks on ``0..length-1``, shared between d with the same radical."""

    def __init__(self, t: FactorTable, length: int):
        self.t = t
        self.length = length
        self.cache: dict[tuple[int, ...], np.ndarray] = {}

    def __call__(self, d: int) -> np.ndarray:
        key = tuple(p for p, _ in self.t.factorize(d))
        m = self.cache.get(key)
        if m is None:
            m = _coprime_mask(self.length, key)
            self.cache[key] = m
        return m


def _second_sum(b: np.ndarray, h: int, Q: float, masks: _Masks, phi, exact: bool, acc: Accumulator):
    """Add sum over d in (Q/2h, Q/h] of (pairs of b coprime to d) / phi(d)."""
    for d in range(math.floor(Q / (2 * h)) + 1, math.floor(Q / h) + 1):
        v = b * masks(d)
        acc.add(_offdiag(v, exact), int(phi[d]))


def _hl_windows(w0: np.ndarray, h: int, x: float, Q: float, t: FactorTable, exact: bool) -> Accumulator:
    acc = Accumulator(exact)
    b = w0[::h]
    n_h = len(b) - 1
    if n_h < 2:
        return acc
    phi = t.phi_table
    masks = _Masks(t, len(b))
    lmax = math.floor(2 * x / (Q * h))
    # first sum of C: d in [(l+1)/2, l), i.e. bands l = d .. 2d-1
    for d in range(1, lmax + 1):
        lo = math.floor(d * Q / 2) + 1
        hi = min(_band_top(min(2 * d - 1, lmax), Q), n_h - 1)
        if hi < lo:
            continue
        c = correlate((b * masks(d))[1:])
        s = c[lo : hi + 1].sum()
        acc.add(int(s) if exact else float(s), int(phi[d]))
    # second sum of C does not depend on l; the bands cover every pair
    neg = Accumulator(exact)
    _second_sum(b, h, Q, masks, phi, exact, neg)
    acc.add_fraction(-neg.result())
    return acc


def _hl_pairs(w0: np.ndarray, h: int, x: float, Q: float, t: FactorTable, exact: bool) -> Accumulator:
    """Same quantity by explicit pair enumeration, each pair assigned its band l."""
    acc = Accumulator(exact)
    b = w0[::h]
    n_h = len(b) - 1
    if n_h < 2:
        return acc
    phi = t.phi_table
    idx = np.arange(1, n_h + 1)
    n1, n2 = np.meshgrid(idx, idx, indexing="ij")
    keep = n2 < n1
    n1, n2 = n1[keep], n2[keep]
    prod = b[n1] * b[n2]
    D = n1 - n2
    # band index: lQ/2 < D <= (l+1)Q/2
    lmax = math.floor(2 * x / (Q * h))
    band = np.empty_like(D)
    for l in range(lmax + 1):
        lo = math.floor(l * Q / 2) + 1
        band[(D >= lo) & (D <= _band_top(l, Q))] = l
    masks = _Masks(t, len(b))
    for d in range(1, lmax + 1):
        ok = masks(d)
        sel = ok[n1] & ok[n2] & (band >= d) & (band <= 2 * d - 1)
        s = prod[sel].sum()
        acc.add(int(s) if exact else float(s), int(phi[d]))
    for d in range(math.floor(Q / (2 * h)) + 1, math.floor(Q / h) + 1):
        ok = masks(d)
        s = prod[ok[n1] & ok[n2]].sum()
        acc.add(-(int(s) if exact else float(s)), int(phi[d]))
    return acc


def _tail(w0: np.ndarray, h: int, Q: float, t: FactorTable, exact: bool) -> Accumulator:
    acc = Accumulator(exact)
    b = w0[::h]
    if len(b) < 3:
        return acc
    _second_sum(b, h, Q, _Masks(t, len(b)), t.phi_table, exact, acc)
    return acc


def key_decomposition(seq: WeightedSequence, Q: float, t: FactorTable | None = None,
                      v_exact=None, method: str = "windows", workers: int = 1) -> KeyDecomposition:
    """Split V(A, x, Q) into diagonal, banded-pair, tail and residual parts.

    ``method="windows"`` sums each coprimality-masked correlation over whole
    difference ranges; ``method="pairs"`` enumerates every pair and is meant
    for small x only.  ``v_exact`` defaults to ``variance_direct``.
    """
    x = seq.x
    if not in_theorem_range(x, Q):
        raise ValueError("key decomposition needs sqrt(2x) < Q <= x")
    if method not in ("windows", "pairs"):
        raise ValueError(f"unknown method {method!r}")
    ex = _use_exact(seq, None)
    if t is None or t.limit < max(math.floor(Q), seq.n):
        t = build_factor_table(max(math.floor(Q), seq.n, 2))
    if v_exact is None:
        v_exact = variance_direct(seq, Q, t)
    w0 = seq.padded if ex else seq.padded.astype(np.float64)
    hl_fn = _hl_windows if method == "windows" else _hl_pairs

    def hl_work(hs):
        acc = Accumulator(ex)
        for h in hs:
            acc.merge(hl_fn(w0, h, x, Q, t, ex))
        return acc

    def tail_work(hs):
        acc = Accumulator(ex)
        for h in hs:
            acc.merge(_tail(w0, h, Q, t, ex))
        return acc

    h_small = list(range(1, math.floor(2 * x / Q) + 1))
    h_tail = list(range(math.floor(2 * x / Q) + 1, min(math.floor(Q), seq.n) + 1))
    hl = _run_chunks(hl_work, h_small, workers, ex).result()
    tail = _run_chunks(tail_work, h_tail, workers, ex).result()
    sq = seq.square_total()
    diagonal = Fraction(Q) * sq / 2 if ex else Q * sq / 2
    if ex:
        v_exact = Fraction(v_exact)
    residual = v_exact - diagonal - 2 * hl + 2 * tail
    return KeyDecomposition(x, Q, diagonal, hl, tail, residual, v_exact, ex)
