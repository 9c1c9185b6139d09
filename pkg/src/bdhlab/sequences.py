"""Weighted integer sequences ``(a_n)_{n <= x}`` and their basic counting functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .sieves import FactorTable, build_factor_table

KINDS = (
    "integers",
    "von_mangoldt",
    "smooth_indicator",
    "multiples_indicator",
    "bernoulli",
    "custom_file",
    "custom",
)


@dataclass(frozen=True, eq=False)
class WeightedSequence:
    """Real weights ``a_1 .. a_floor(x)``.

    ``weights[i]`` holds ``a_{i+1}``.  Integer-valued sequences store an
    ``int64`` array and take the exact arithmetic paths downstream.
    """

    x: float
    weights: np.ndarray
    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) != math.floor(self.x):
            raise ValueError("weights length must equal floor(x)")
        self.weights.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def exact(self) -> bool:
        return self.weights.dtype.kind in "iu"

    @property
    def padded(self) -> np.ndarray:
        """Weights with a leading zero, so that ``padded[n] == a_n``."""
        out = np.zeros(self.n + 1, dtype=self.weights.dtype)
        out[1:] = self.weights
        return out

    def total(self):
        return _sum(self.weights)

    def abs_total(self):
        return _sum(np.abs(self.weights))

    def square_total(self):
        return _sum(self.weights * self.weights)

    def scaled(self, c) -> "WeightedSequence":
        w = self.weights * c
        return WeightedSequence(self.x, w, "custom", {"scaled_from": self.kind, "c": c})

    def describe(self) -> str:
        """Compact ``key=value`` rendering of the generator parameters."""
        return ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))


def _sum(a: np.ndarray):
    if a.dtype.kind in "iu":
        return int(a.sum(dtype=object)) if a.size and np.abs(a).max() > 2**20 else int(a.sum())
    return math.fsum(a.tolist())


def from_weights(weights, x: float | None = None, kind: str = "custom", **params) -> WeightedSequence:
    """Wrap an explicit weight list.  Integral-valued input keeps the exact path."""
    arr = np.asarray(weights)
    if arr.dtype.kind == "f" and np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)):
        if arr.size == 0 or np.abs(arr).max() < 2**53:
            arr = arr.astype(np.int64)
    elif arr.dtype.kind == "b":
        arr = arr.astype(np.int64)
    elif arr.dtype.kind in "iu":
        arr = arr.astype(np.int64)
    else:
        arr = arr.astype(np.float64)
    return WeightedSequence(float(len(arr) if x is None else x), arr.copy(), kind, params)


def read_weight_file(path: str | Path, x: float | None = None) -> WeightedSequence:
    """Read one decimal weight per line (line n holds ``a_n``); a blank line ends the data."""
    values: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                break
            try:
                float(s)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed weight {s!r}") from None
            values.append(s)
    if not values:
        raise ValueError(f"{path}: no weights")
    if all(_is_int_literal(s) for s in values):
        arr = np.array([int(s) for s in values], dtype=np.int64)
    else:
        arr = np.array([float(s) for s in values], dtype=np.float64)
    if x is not None:
        m = math.floor(x)
        if m > len(arr):
            raise ValueError(f"{path}: file holds {len(arr)} weights, x={x} needs {m}")
        arr = arr[:m]
    return WeightedSequence(float(len(arr) if x is None else x), arr, "custom_file", {"path": str(path)})


def _is_int_literal(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def _table_for(x: float, table: FactorTable | None) -> FactorTable:
    n = max(math.floor(x), 1)
    if table is not None and table.limit >= n:
        return table
    return build_factor_table(n)


def generate(kind: str, x: float, table: FactorTable | None = None, **params) -> WeightedSequence:
    """Build one of the standard sequences.

    kind-specific parameters: ``smooth_indicator(y)``, ``multiples_indicator(p)``,
    ``bernoulli(alpha, seed)``, ``custom_file(path)``.  The Bernoulli generator
    is numpy's PCG64 seeded with ``seed``.
    """
    if x < 2:
        raise ValueError("x must be >= 2")
    n = math.floor(x)
    if kind == "integers":
        return WeightedSequence(x, np.ones(n, dtype=np.int64), kind, {})
    if kind == "von_mangoldt":
        t = _table_for(x, table)
        w = np.zeros(n + 1)
        for p in t.primes.tolist():
            if p > n:
                break
            lp = math.log(p)
            pk = p
            while pk <= n:
                w[pk] = lp
                pk *= p
        return WeightedSequence(x, w[1:], kind, {})
    if kind == "smooth_indicator":
        y = params.get("y")
        if y is None or y < 2:
            raise ValueError("smooth_indicator needs y >= 2")
        t = _table_for(x, table)
        w = (t.lpf[1 : n + 1] <= y).astype(np.int64)
        return WeightedSequence(x, w, kind, {"y": y})
    if kind == "multiples_indicator":
        p = params.get("p")
        if p is None or p > n:
            raise ValueError("multiples_indicator needs a prime p <= x")
        p = int(p)
        if not _is_prime(p):
            raise ValueError(f"p={p} is not prime")
        w = np.zeros(n + 1, dtype=np.int64)
        w[p::p] = 1
        return WeightedSequence(x, w[1:], kind, {"p": p})
    if kind == "bernoulli":
        alpha = params.get("alpha")
        seed = params.get("seed")
        if alpha is None or not 0 < alpha < 1:
            raise ValueError("bernoulli needs 0 < alpha < 1")
        if seed is None:
            raise ValueError("bernoulli needs an explicit seed")
        rng = np.random.Generator(np.random.PCG64(int(seed)))
        w = (rng.random(n) < alpha).astype(np.int64)
        return WeightedSequence(x, w, kind, {"alpha": alpha, "seed": int(seed)})
    if kind == "custom_file":
        path = params.get("path")
        if path is None:
            raise ValueError("custom_file needs a path")
        return read_weight_file(path, x)
    raise ValueError(f"unknown sequence kind {kind!r}")


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def count_progression(seq: WeightedSequence, z: float, q: int, a: int):
    """A(z; q, a): the weight of ``n <= z`` with ``n = a (mod q)``."""
    if not 1 <= a <= q:
        raise ValueError("residue a must satisfy 1 <= a <= q")
    m = min(math.floor(z), seq.n)
    if m < 1:
        return 0
    start = a % q or q
    return _sum(seq.weights[start - 1 : m : q])


def average_gcd_class(seq: WeightedSequence, z: float, q: int, h: int):
    """Aver(A, z; q, h): mean of A(z; q, a) over the residues with (a, q) = h."""
    if q % h:
        raise ValueError(f"h={h} does not divide q={q}")
    m = min(math.floor(z), seq.n)
    d = q // h
    phi = sum(1 for r in range(1, d + 1) if math.gcd(r, d) == 1)
    if m < 1:
        return 0
    n = np.arange(h, m + 1, h)
    sel = np.gcd(n // h, d) == 1
    s = _sum(seq.weights[n[sel] - 1])
    if seq.exact:
        from fractions import Fraction

        return Fraction(s, phi)
    return s / phi


def multiple_sum_table(seq: WeightedSequence, use_abs: bool = False) -> np.ndarray:
    """``M[k] = sum of a_n over multiples n of k`` for ``0 <= k <= floor(x)`` (M[0] unused)."""
    w = seq.padded
    if use_abs:
        w = np.abs(w)
    N = seq.n
    M = np.zeros(N + 1, dtype=w.dtype)
    for k in range(1, N + 1):
        M[k] = w[k::k].sum()
    return M
