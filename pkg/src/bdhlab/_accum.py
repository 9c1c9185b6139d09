from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction


class Accumulator:
    """Sum of terms ``numer / den`` with small positive integer ``den``.

    On the exact path numerators are integers, grouped by denominator and
    combined over a single common denominator at the end.  On the float path
    terms are collected and summed with ``math.fsum``, which is correctly
    rounded and therefore independent of the order terms arrive in.
    """

    __slots__ = ("exact", "_num", "_terms")

    def __init__(self, exact: bool):
        self.exact = exact
        self._num: dict[int, int] = defaultdict(int)
        self._terms: list[float] = []

    def add(self, numer, den: int = 1) -> None:
        if self.exact:
            self._num[den] += int(numer)
        else:
            self._terms.append(float(numer) / den)

    def add_fraction(self, value) -> None:
        if self.exact:
            value = Fraction(value)
            self._num[value.denominator] += value.numerator
        else:
            self._terms.append(float(value))

    def merge(self, other: "Accumulator") -> None:
        if self.exact:
            for den, num in other._num.items():
                self._num[den] += num
        else:
            self._terms.extend(other._terms)

    def result(self):
        if not self.exact:
            return math.fsum(self._terms)
        items = [(d, n) for d, n in self._num.items() if n]
        if not items:
            return Fraction(0)
        common = math.lcm(*(d for d, _ in items))
        return Fraction(sum(n * (common // d) for d, n in items), common)
