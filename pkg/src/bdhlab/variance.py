"""Three independent evaluations of the progression variance V(A, x, Q).

* ``variance_direct`` buckets the weights modulo each q and measures the
  squared deviation of every residue class from its gcd-class average.
* ``variance_expanded`` opens the square: the diagonal/autocorrelation form of
  the first sum, and a Moebius inversion over multiple sums for the second.
* ``variance_switched`` replaces the large modulus q by the small
  complementary divisor r and sums windowed pair products inside each residue
  class mod r.

Integer-valued sequences are handled exactly and the functions return a
``Fraction``; real-valued sequences give a float.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from ._accum import Accumulator
from .sequences import WeightedSequence, multiple_sum_table
from .sieves import FactorTable, build_factor_table

DIRECT_CORRELATION_LIMIT = 4096
FLOAT_RTOL = 1e-9


class InvariantViolation(AssertionError):
    """Independent evaluations that must agree did not."""


def moduli(Q: float) -> range:
    """Integers q with Q/2 < q <= Q."""
    return range(math.floor(Q / 2) + 1, math.floor(Q) + 1)


def in_theorem_range(x: float, Q: float) -> bool:
    return Q * Q > 2 * x and Q <= x


def _table(seq: WeightedSequence, Q: float, table: FactorTable | None) -> FactorTable:
    need = max(math.floor(Q), seq.n, 2)
    if table is not None and table.limit >= need:
        return table
    return build_factor_table(need)


def _use_exact(seq: WeightedSequence, exact: bool | None) -> bool:
    if exact is None:
        return seq.exact
    return exact and seq.exact


def _check_Q(Q: float) -> None:
    if not Q >= 2:
        raise ValueError("Q must be >= 2")


def _run_chunks(fn, items: list, workers: int, exact: bool) -> Accumulator:
    total = Accumulator(exact)
    if workers <= 1 or len(items) < 2 * workers:
        total.merge(fn(items))
        return total
    size = -(-len(items) // workers)
    chunks = [items[i : i + size] for i in range(0, len(items), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for acc in pool.map(fn, chunks):
            total.merge(acc)
    return total


def _buckets(w0: np.ndarray, q: int) -> np.ndarray:
    """Residue sums: ``B[c] = sum of a_n over n = c (mod q)``; ``w0[n] == a_n``."""
    L = len(w0)
    m = L // q
    if m:
        B = w0[: m * q].reshape(m, q).sum(axis=0)
    else:
        B = np.zeros(q, dtype=w0.dtype)
    rest = L - m * q
    if rest:
        B[:rest] += w0[m * q :]
    return B


def direct_terms(seq: WeightedSequence, qs: Iterable[int], t: FactorTable,
                 exact: bool, workers: int = 1) -> Accumulator:
    """Sum over the given moduli of the per-q squared deviations."""
    w0 = seq.padded if exact else seq.padded.astype(np.float64)
    phi = t.phi_table

    def work(chunk):
        acc = Accumulator(exact)
        for q in chunk:
            B = _buckets(w0, q)
            divs = t.divisors(q)
            lab = np.ones(q, dtype=np.int64)
            for d in divs[1:]:
                lab[::d] = d
            if exact:
                S = np.zeros(q + 1, dtype=np.int64)
                np.add.at(S, lab, B)
                acc.add(int(np.dot(B, B)))
                for h in divs:
                    s = int(S[h])
                    if s:
                        acc.add(-s * s, int(phi[q // h]))
            else:
                S = np.bincount(lab, weights=B, minlength=q + 1)
                avg = np.zeros(q + 1)
                for h in divs:
                    avg[h] = S[h] / phi[q // h]
                dev = B - avg[lab]
                acc.add(float(np.dot(dev, dev)))
        return acc

    return _run_chunks(work, list(qs), workers, exact)


def variance_direct(seq: WeightedSequence, Q: float, table: FactorTable | None = None,
                    exact: bool | None = None, workers: int = 1):
    """V(A, x, Q) by literal bucketing of every modulus q in (Q/2, Q]."""
    _check_Q(Q)
    ex = _use_exact(seq, exact)
    t = _table(seq, Q, table)
    return direct_terms(seq, moduli(Q), t, ex, workers).result()


def _kronecker_correlation(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Exact ``c[d] = sum_i u[i+d] v[i]`` for non-negative integer arrays."""
    import gmpy2

    n = len(u)
    bound = int(u.max(initial=0)) * int(v.max(initial=0)) * n
    if bound == 0:
        return np.zeros(n, dtype=np.int64)
    limbs = -(-(bound.bit_length() + 1) // 64)

    def pack(a):
        buf = np.zeros((len(a), limbs), dtype=np.uint64)
        buf[:, 0] = a
        return int.from_bytes(buf.tobytes(), "little")

    U = gmpy2.mpz(pack(u))
    V = gmpy2.mpz(pack(v[::-1]))
    prod = int(U * V)
    raw = prod.to_bytes((2 * n) * limbs * 8, "little")
    words = np.frombuffer(raw, dtype=np.uint64).reshape(2 * n, limbs)[n - 1 : 2 * n - 1]
    if limbs == 1 and bound < 2**63:
        return words[:, 0].astype(np.int64)
    out = np.empty(n, dtype=object)
    for i, row in enumerate(words):
        out[i] = sum(int(wd) << (64 * j) for j, wd in enumerate(row))
    return out


def autocorrelation(seq: WeightedSequence) -> np.ndarray:
    """``c[d] = sum_n a_{n+d} a_n`` for ``0 <= d < floor(x)`` (``c[0]`` is the sum of squares)."""
    return correlate(seq.weights)


def correlate(a: np.ndarray) -> np.ndarray:
    """Autocorrelation of a raw weight array; exact for integer dtypes."""
    n = len(a)
    if n == 0:
        return np.zeros(0, dtype=a.dtype)
    if a.dtype.kind in "iu":
        if n <= DIRECT_CORRELATION_LIMIT and int(np.abs(a).max(initial=0)) ** 2 * n < 2**62:
            return np.correlate(a, a, mode="full")[n - 1 :]
        pos = np.where(a > 0, a, 0)
        neg = np.where(a < 0, -a, 0)
        c = _kronecker_correlation(pos, pos)
        if neg.any():
            c = (c + _kronecker_correlation(neg, neg)
                 - _kronecker_correlation(pos, neg) - _kronecker_correlation(neg, pos))
        return c
    if n <= DIRECT_CORRELATION_LIMIT:
        return np.correlate(a, a, mode="full")[n - 1 :]
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(a, size)
    return np.fft.irfft(f * np.conj(f), size)[:n]


def divisor_count_in_range(n: int, Q: float) -> np.ndarray:
    """``r[d] = #{q in (Q/2, Q] : q | d}`` for ``0 <= d < n``."""
    r = np.zeros(max(n, 1), dtype=np.int64)
    for q in moduli(Q):
        if q >= n:
            break
        r[q::q] += 1
    r[0] = 0
    return r


def _diagonal_count(Q: float) -> int:
    return math.floor(Q) - math.floor(Q / 2)


def _mobius_class_sums(seq: WeightedSequence, Q: float, t: FactorTable, exact: bool) -> Accumulator:
    """Second sum of the opened square via Moebius inversion over multiple sums."""
    M = multiple_sum_table(seq)
    N = seq.n
    mu = t.mobius_table
    phi = t.phi_table
    acc = Accumulator(exact)
    for q in moduli(Q):
        for h in t.divisors(q):
            if h > N:
                break
            k = q // h
            s = 0
            for e in t.divisors(k):
                if mu[e] and h * e <= N:
                    s += int(mu[e]) * M[h * e]
            if s:
                acc.add(int(s) * int(s) if exact else s * s, int(phi[k]))
    return acc


def variance_expanded(seq: WeightedSequence, Q: float, table: FactorTable | None = None,
                      exact: bool | None = None):
    """V(A, x, Q) from the autocorrelation of A and Moebius-inverted gcd-class sums."""
    _check_Q(Q)
    ex = _use_exact(seq, exact)
    t = _table(seq, Q, table)
    c = autocorrelation(seq)
    n = seq.n
    acc = Accumulator(ex)
    if n:
        r = divisor_count_in_range(n, Q)
        if ex:
            acc.add(_diagonal_count(Q) * int(c[0]) + 2 * int(np.dot(c[1:].astype(object), r[1:])))
        else:
            acc.add(_diagonal_count(Q) * float(c[0]))
            acc.add(2 * math.fsum((c[1:] * r[1:]).tolist()))
    second = _mobius_class_sums(seq, Q, t, ex)
    return acc.result() - second.result()


def _switched_pairs(w0: np.ndarray, r: int, m_lo: int, m_hi: int):
    """sum over n1 of a_{n1} * sum_{m_lo <= m <= m_hi} a_{n1 - r m} (all in one residue class)."""
    L = len(w0)
    rows = -(-L // r)
    W = np.zeros(rows * r, dtype=w0.dtype)
    W[:L] = w0
    W = W.reshape(rows, r)
    P = np.zeros((rows + 1, r), dtype=w0.dtype)
    np.cumsum(W, axis=0, out=P[1:])
    k = np.arange(rows)
    hi = k - m_lo + 1
    lo = np.maximum(k - m_hi, 0)
    ok = hi > 0
    win = np.zeros_like(W)
    win[ok] = P[hi[ok]] - P[lo[ok]]
    return (W * win).sum()


def _coprime_mask(length: int, primes: Iterable[int]) -> np.ndarray:
    """mask[n] for 0 <= n < length, True when n shares no listed prime."""
    mask = np.ones(length, dtype=bool)
    for p in primes:
        mask[::p] = False
    return mask


def variance_switched(seq: WeightedSequence, Q: float, table: FactorTable | None = None,
                      exact: bool | None = None):
    """V(A, x, Q) after switching each modulus q to the complementary divisor r <= 2x/Q."""
    _check_Q(Q)
    if not Q * Q > 2 * seq.x:
        raise ValueError("divisor switching needs Q > sqrt(2x)")
    ex = _use_exact(seq, exact)
    t = _table(seq, Q, table)
    w0 = seq.padded if ex else seq.padded.astype(np.float64)
    n = seq.n
    acc = Accumulator(ex)
    sq = w0 * w0
    acc.add(_diagonal_count(Q) * (int(sq.sum()) if ex else float(sq.sum())))
    m_lo, m_hi = math.floor(Q / 2) + 1, math.floor(Q)
    for r in range(1, math.floor(2 * seq.x / Q) + 1):
        s = _switched_pairs(w0, r, m_lo, m_hi)
        acc.add(2 * (int(s) if ex else float(s)))
    # gcd-class sums: q = h d with (n/h, d) = 1, masks shared by radical of d
    phi = t.phi_table
    for h in range(1, min(math.floor(Q), n) + 1):
        b = w0[::h]
        masks: dict[tuple[int, ...], object] = {}
        for d in range(math.floor(Q / (2 * h)) + 1, math.floor(Q / h) + 1):
            key = tuple(p for p, _ in t.factorize(d))
            s = masks.get(key)
            if s is None:
                s = b[_coprime_mask(len(b), key)].sum()
                s = int(s) if ex else float(s)
                masks[key] = s
            if s:
                acc.add(-(s * s), int(phi[d]))
    return acc.result()


@dataclass
class VarianceReport:
    x: float
    Q: float
    value_direct: object = None
    value_expanded: object = None
    value_switched: object = None
    diagonal: object = None
    decomposition: object = None
    exact: bool = False
    in_theorem_range: bool = False

    def values(self) -> dict:
        return {k: v for k, v in (("direct", self.value_direct),
                                  ("expanded", self.value_expanded),
                                  ("switched", self.value_switched)) if v is not None}


def agree(u, v, exact: bool, floor: float = 0.0) -> bool:
    """Exact equality, or relative agreement to ``FLOAT_RTOL`` plus an absolute ``floor``."""
    if exact:
        return u == v
    tol = FLOAT_RTOL * max(abs(float(u)), abs(float(v))) + floor
    return abs(float(u) - float(v)) <= tol


def variance_report(seq: WeightedSequence, Q: float, table: FactorTable | None = None,
                    algorithms=("direct", "expanded", "switched"), decomposition: bool = False,
                    workers: int = 1, check: bool = True) -> VarianceReport:
    """Run the selected algorithms and check that they agree.

    Raises ``InvariantViolation`` on disagreement when ``check`` is set.
    """
    t = _table(seq, Q, table)
    rep = VarianceReport(seq.x, Q, exact=seq.exact, in_theorem_range=in_theorem_range(seq.x, Q))
    if "direct" in algorithms:
        rep.value_direct = variance_direct(seq, Q, t, workers=workers)
    if "expanded" in algorithms:
        rep.value_expanded = variance_expanded(seq, Q, t)
    if "switched" in algorithms and Q * Q > 2 * seq.x:
        rep.value_switched = variance_switched(seq, Q, t)
    sq = seq.square_total()
    rep.diagonal = _diagonal_count(Q) * sq
    vals = list(rep.values().values())
    if check:
        floor = 1e-12 * abs(float(rep.diagonal))
        for v in vals[1:]:
            if not agree(vals[0], v, seq.exact, floor):
                raise InvariantViolation(f"variance algorithms disagree: {rep.values()}")
    if decomposition and in_theorem_range(seq.x, Q):
        from .decomposition import key_decomposition

        ref = rep.value_direct if rep.value_direct is not None else vals[0]
        rep.decomposition = key_decomposition(seq, Q, t, v_exact=ref)
    return rep


def as_float(v) -> float:
    return float(v) if isinstance(v, Fraction) else v
