"""Smallest-prime-factor sieve and the arithmetic functions built on it.

Scalar evaluators (``euler_phi``, ``tau``, ...) factor a single ``n`` through
the table.  The ``*_table`` helpers return whole arrays indexed by ``n``
(index 0 is padding) and are what the variance and condition code uses.
"""
from __future__ import annotations

import os
from bisect import bisect_right
from functools import cached_property
from math import isqrt, prod

import numpy as np

DEFAULT_SEGMENT = 1 << 22
MEMORY_ENV = "BDH_LAB_MAX_MEMORY_MB"


class ResourceLimitError(RuntimeError):
    """Raised when a sieve allocation would exceed the configured memory cap."""


def _check_memory(nbytes: int) -> None:
    cap = os.environ.get(MEMORY_ENV)
    if cap is None:
        return
    cap_bytes = float(cap) * 2**20
    if nbytes > cap_bytes:
        raise ResourceLimitError(
            f"sieve needs {nbytes / 2**20:.1f} MB, cap is {cap} MB; "
            f"lower x or raise {MEMORY_ENV}"
        )


def _small_primes(n: int) -> list[int]:
    if n < 2:
        return []
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).tolist()


class FactorTable:
    """Smallest prime factor of every ``1 <= n <= limit``.

    ``spf[1] == 1`` so that factorisation loops stop uniformly.  The table is
    never mutated after construction.
    """

    def __init__(self, limit: int, spf: np.ndarray):
        self.limit = limit
        self.spf = spf
        self.spf.flags.writeable = False

    def __repr__(self) -> str:
        return f"FactorTable(limit={self.limit})"

    def _check(self, n: int) -> None:
        if not 1 <= n <= self.limit:
            raise ValueError(f"n={n} outside table range [1, {self.limit}]")

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """Prime factorisation of ``n`` as ``[(p, e), ...]`` with increasing p."""
        self._check(n)
        spf = self.spf
        out: list[tuple[int, int]] = []
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def is_prime(self, n: int) -> bool:
        return 2 <= n <= self.limit and int(self.spf[n]) == n

    def divisors(self, n: int) -> list[int]:
        divs = [1]
        for p, e in self.factorize(n):
            divs = [d * p**k for d in divs for k in range(e + 1)]
        return sorted(divs)

    def radical(self, n: int) -> int:
        return prod(p for p, _ in self.factorize(n))

    @cached_property
    def primes(self) -> np.ndarray:
        n = np.arange(self.limit + 1, dtype=np.uint32)
        return np.flatnonzero((self.spf == n) & (n >= 2))

    @cached_property
    def lpf(self) -> np.ndarray:
        """Largest prime factor table (``lpf[1] == 1``)."""
        _check_memory(4 * (self.limit + 1))
        out = np.zeros(self.limit + 1, dtype=np.uint32)
        if self.limit >= 1:
            out[1] = 1
        for p in self.primes.tolist():
            out[p :: p] = p
        out.flags.writeable = False
        return out

    def _multiplicative(self, local, primes=None) -> np.ndarray:
        """Table of the multiplicative function with ``f(p^e) = local(p, e)``.

        ``local`` receives an integer array of exponents and must return an
        array of the same shape.
        """
        N = self.limit
        out = np.ones(N + 1, dtype=np.int64)
        out[0] = 0
        plist = self.primes.tolist() if primes is None else primes
        for p in plist:
            count = N // p
            e = np.ones(count, dtype=np.int64)
            pk = p
            while pk <= N // p:
                pk *= p
                e[pk // p - 1 :: pk // p] += 1
            out[p :: p] *= local(p, e)
        return out

    @cached_property
    def phi_table(self) -> np.ndarray:
        t = self._multiplicative(lambda p, e: (p - 1) * np.power(p, e - 1))
        t.flags.writeable = False
        return t

    @cached_property
    def mobius_table(self) -> np.ndarray:
        t = self._multiplicative(lambda p, e: np.where(e == 1, -1, 0))
        t.flags.writeable = False
        return t

    @cached_property
    def tau_table(self) -> np.ndarray:
        t = self._multiplicative(lambda p, e: e + 1)
        t.flags.writeable = False
        return t

    def tau3_table(self, prime_threshold: float | None = None) -> np.ndarray:
        """tau_3 table, truncated to factor 1 on primes above the threshold."""
        if prime_threshold is None:
            primes = None
        else:
            plist = self.primes.tolist()
            primes = plist[: bisect_right(plist, prime_threshold)]
        return self._multiplicative(lambda p, e: (e + 1) * (e + 2) // 2, primes)

    def smooth_part_table(self, P: float) -> np.ndarray:
        plist = self.primes.tolist()
        return self._multiplicative(
            lambda p, e: np.power(p, e), plist[: bisect_right(plist, P)]
        )


def build_factor_table(N: int, segment: int = DEFAULT_SEGMENT) -> FactorTable:
    """Sieve smallest prime factors up to ``N`` in segments of ``segment`` entries."""
    N = int(N)
    if N < 1:
        raise ValueError("factor table limit must be >= 1")
    _check_memory(4 * (N + 1))
    spf = np.zeros(N + 1, dtype=np.uint32)
    base = _small_primes(isqrt(N))
    squares = [p * p for p in base]
    for lo in range(0, N + 1, segment):
        hi = min(lo + segment, N + 1)
        seg = spf[lo:hi]
        # descending, so the smallest prime is written last
        for p in reversed(base[: bisect_right(squares, hi - 1)]):
            start = max(p * p, -(-lo // p) * p)
            seg[start - lo :: p] = p
    idx = np.flatnonzero(spf == 0)
    spf[idx] = idx
    spf[0] = 0
    return FactorTable(N, spf)


def euler_phi(n: int, t: FactorTable) -> int:
    result = n
    for p, _ in t.factorize(n):
        result -= result // p
    return result


def mobius(n: int, t: FactorTable) -> int:
    fac = t.factorize(n)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def tau(n: int, t: FactorTable) -> int:
    return prod(e + 1 for _, e in t.factorize(n))


def tau3(n: int, t: FactorTable, prime_threshold: float | None = None) -> int:
    """Threefold divisor function; factors at primes above the threshold become 1."""
    if prime_threshold is not None and prime_threshold < 2:
        raise ValueError("prime_threshold must be >= 2 or None")
    return prod(
        (e + 1) * (e + 2) // 2
        for p, e in t.factorize(n)
        if prime_threshold is None or p <= prime_threshold
    )


def smooth_part(n: int, P: float, t: FactorTable) -> int:
    """Largest P-smooth divisor of ``n``."""
    if P < 1:
        raise ValueError("P must be >= 1")
    return prod(p**e for p, e in t.factorize(n) if p <= P)
