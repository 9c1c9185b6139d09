"""Measured constants for the distribution hypotheses on a finite sequence.

Every measurement computes a left-hand side exactly (or on a documented
window grid) and turns it into the implied constant ``normaliser / LHS``.
An empty left-hand side gives ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._accum import Accumulator
from .sequences import WeightedSequence, multiple_sum_table
from .sieves import FactorTable, build_factor_table

FULL_WINDOW_LIMIT = 2048
GRID_RATIO = 1.1


def _implied(norm, lhs) -> float:
    if lhs == 0:
        return math.inf
    return float(Fraction(norm) / Fraction(lhs)) if isinstance(lhs, Fraction) else float(norm) / float(lhs)


def _table(seq: WeightedSequence, t: FactorTable | None) -> FactorTable:
    if t is not None and t.limit >= seq.n:
        return t
    return build_factor_table(max(seq.n, 2))


def window_extrema(f: np.ndarray, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Max and min of ``f[s : s + w]`` for every start s (windows clipped at the end).

    Block prefix/suffix scans, so the cost is linear in ``len(f)`` for any w.
    """
    L = len(f)
    nb = -(-L // w) + 1
    g = np.empty(nb * w, dtype=f.dtype)
    g[:L] = f
    g[L:] = f[-1]
    blocks = g.reshape(nb, w)
    pre_max = np.maximum.accumulate(blocks, axis=1).ravel()
    pre_min = np.minimum.accumulate(blocks, axis=1).ravel()
    suf_max = np.maximum.accumulate(blocks[:, ::-1], axis=1)[:, ::-1].ravel()
    suf_min = np.minimum.accumulate(blocks[:, ::-1], axis=1)[:, ::-1].ravel()
    s = np.arange(L)
    wmax = np.maximum(suf_max[s], pre_max[s + w - 1])
    wmin = np.minimum(suf_min[s], pre_min[s + w - 1])
    return wmax, wmin


def progressions_lhs(seq: WeightedSequence, Q: float):
    """Sum over r <= 2x/Q and residues a of (class mass) * max_z |A(z;r,a) - Aver(A,z;r,(a,r))|.

    For a fixed class, A(z;r,a) is constant between consecutive members of the
    class, which are r apart, so the supremum over z only needs the extreme
    values of the gcd-class average over windows of width r.  Integer weights
    are compared after scaling by phi(r/h), which keeps the result exact.
    """
    exact = seq.exact
    w0 = seq.padded if exact else seq.padded.astype(np.float64)
    N = seq.n
    n = np.arange(N + 1)
    acc = Accumulator(exact)
    absw = np.abs(w0)
    for r in range(2, math.floor(2 * seq.x / Q) + 1):
        g = np.gcd(n, r)
        g[0] = 0
        mass = np.zeros(r, dtype=absw.dtype)
        np.add.at(mass, n % r, absw)
        for h in (d for d in range(1, r + 1) if r % d == 0):
            phi = sum(1 for c in range(1, r // h + 1) if math.gcd(c, r // h) == 1)
            S = np.cumsum(np.where(g == h, w0, 0))
            # deviation scaled by phi: |phi * A - S_h|
            wmax, wmin = window_extrema(S, r)
            prefix_abs = np.maximum.accumulate(np.abs(S))
            for a in range(h, r + 1, h):
                if math.gcd(a, r) != h or a > N:
                    continue
                starts = np.arange(a, N + 1, r)
                A = np.cumsum(w0[starts]) * phi
                dev = max(
                    np.max(np.maximum(wmax[starts] - A, A - wmin[starts]), initial=0),
                    prefix_abs[a - 1],
                )
                m = mass[a % r]
                if exact:
                    acc.add(int(m) * int(dev), phi)
                else:
                    acc.add(float(m) * float(dev), phi)
    return acc.result()


def measure_k_prog(seq: WeightedSequence, Q: float):
    """Implied K_prog and its left-hand side."""
    if not Q * Q > 2 * seq.x:
        raise ValueError("K_prog needs Q > sqrt(2x)")
    lhs = progressions_lhs(seq, Q)
    s = seq.abs_total()
    return _implied(s * s, lhs), lhs


def concentration_lhs(seq: WeightedSequence, Q: float, H_grid) -> dict:
    M = multiple_sum_table(seq, use_abs=True)
    top = min(math.floor(Q), seq.n)
    sq = [0] * (seq.n + 2)
    exact = seq.exact
    # suffix sums of M[h]^2 over h in [H, top]
    running = 0 if exact else 0.0
    for h in range(top, 0, -1):
        v = int(M[h]) if exact else float(M[h])
        running = running + v * v
        sq[h] = running
    out = {}
    for H in H_grid:
        if H > Q:
            out[H] = 0
            continue
        lo = max(math.ceil(H), 1)
        out[H] = sq[lo] if lo <= top else 0
    return out


def measure_k_conc(seq: WeightedSequence, Q: float, H_grid) -> tuple[dict, dict]:
    """Implied K_conc[H] for each H, and the left-hand sides."""
    for H in H_grid:
        if H < 1:
            raise ValueError("H must be >= 1")
    lhs = concentration_lhs(seq, Q, H_grid)
    s = seq.abs_total()
    return {H: _implied(s * s, v) for H, v in lhs.items()}, lhs


def hered_window_sup(seq: WeightedSequence, Q: float, t: FactorTable | None = None):
    """max over h <= 2x/Q and windows of ceil(Q/2) consecutive n of sum |a_{nh}| tau(n)."""
    t = _table(seq, t)
    w0 = np.abs(seq.padded)
    tau = t.tau_table
    width = math.ceil(Q / 2)
    best = 0
    for h in range(1, math.floor(2 * seq.x / Q) + 1):
        b = w0[::h][1:]
        if not len(b):
            break
        b = b * tau[1 : len(b) + 1]
        c = np.concatenate(([0], np.cumsum(b)))
        k = min(width, len(b))
        v = (c[k:] - c[:-k]).max()
        best = max(best, v.item())
    return best


def measure_k_hered(seq: WeightedSequence, Q: float, t: FactorTable | None = None):
    """Implied K_hered and the window supremum."""
    if not (Q * Q > 2 * seq.x and Q <= seq.x):
        raise ValueError("K_hered needs sqrt(2x) < Q <= x")
    t = _table(seq, t)
    sup = hered_window_sup(seq, Q, t)
    s = seq.abs_total()
    w = np.abs(seq.weights)
    tau3 = t.tau3_table()[1 : seq.n + 1]
    denom = (w * tau3).sum()
    if sup == 0 or denom == 0:
        return math.inf, sup
    return float(s * s) / (float(denom) * float(sup)), sup


def _grid(n: int, full_limit: int) -> np.ndarray:
    if n <= full_limit:
        return np.arange(1, n + 1)
    pts = {1, n}
    v = 1.0
    while v < n:
        pts.add(int(round(v)))
        v *= GRID_RATIO
    return np.array(sorted(p for p in pts if 1 <= p <= n))


@dataclass
class IntegerLikeness:
    P: float
    R: float
    frontier: list = field(default_factory=list)  # (K2, K1, K3)
    windows: int = 0
    sup_disc: float = 0.0
    sup_tau: float = 0.0

    def best(self):
        """Frontier entry with the largest K1, ties broken by the smaller K3."""
        if not self.frontier:
            return (math.inf, math.inf, math.inf)
        return max(self.frontier, key=lambda e: (e[1], -e[2]))


def measure_k_int(seq: WeightedSequence, Q: float, P: float, R: float, K2_candidates,
                  t: FactorTable | None = None, full_limit: int = FULL_WINDOW_LIMIT) -> IntegerLikeness:
    """Integer-likeness constants over intervals I = [s, e] of n-values, |I| = e - s.

    For each candidate K2 the reported K1 is the largest value for which the
    rough-number discrepancy bound holds on every sampled (h, I), and K3 the
    smallest value (at least 1) for which the divisor-weighted bound holds.
    """
    if not 3 <= P <= R:
        raise ValueError("need 3 <= P <= R")
    t = _table(seq, t)
    x = seq.x
    w0 = seq.padded.astype(np.float64)
    S_abs = float(seq.abs_total())
    S = float(seq.total())
    K2_candidates = list(K2_candidates)
    out = IntegerLikeness(P, R)
    if S_abs == 0:
        out.frontier = [(math.inf, math.inf, math.inf)]
        return out
    spf = t.spf
    tau = t.tau_table
    density = S / x
    unit = S_abs / x
    k1 = np.full(len(K2_candidates), math.inf)
    k3 = np.ones(len(K2_candidates))
    offs = np.array([S_abs / k2 for k2 in K2_candidates])
    for h in range(1, seq.n + 1):
        b = w0[::h]
        N_h = len(b) - 1
        if N_h < 1:
            break
        m = np.arange(1, N_h + 1)
        rough = (spf[1 : N_h + 1] > P) | (m == 1)
        c_rough = np.concatenate(([0.0], np.cumsum(np.where(rough, b[1:], 0.0))))
        c_count = np.concatenate(([0.0], np.cumsum(rough.astype(np.float64))))
        c_tau = np.concatenate(([0.0], np.cumsum(np.abs(b[1:]) * tau[1 : N_h + 1])))
        pts = _grid(N_h, full_limit)
        rows = max(1, (1 << 20) // len(pts))
        for i0 in range(0, len(pts), rows):
            st = pts[i0 : i0 + rows, None]
            e = pts[None, :]
            ok = e >= st
            length = (e - st).astype(np.float64)[ok]
            disc = np.abs((c_rough[e] - c_rough[st - 1])
                          - density * (c_count[e] - c_count[st - 1]))[ok]
            lhs2 = (c_tau[e] - c_tau[st - 1])[ok]
            out.windows += int(ok.sum())
            out.sup_disc = max(out.sup_disc, float(disc.max()))
            out.sup_tau = max(out.sup_tau, float(lhs2.max()))
            for i, off in enumerate(offs):
                over = disc - off
                bad = over > 0
                if bad.any():
                    k1[i] = min(k1[i], float(np.min(length[bad] * unit / over[bad])))
                over2 = lhs2 - off
                bad2 = over2 > 0
                if bad2.any():
                    if np.any(length[bad2] == 0):
                        k3[i] = math.inf
                    else:
                        k3[i] = max(k3[i], float(np.max(over2[bad2] / (length[bad2] * unit))))
    out.frontier = [(k2, float(a), float(c)) for k2, a, c in zip(K2_candidates, k1, k3)]
    return out


@dataclass
class ConditionProfile:
    x: float
    Q: float
    k_prog: float = math.nan
    lhs_prog: object = None
    k_conc: dict = field(default_factory=dict)
    lhs_conc: dict = field(default_factory=dict)
    k_hered: float = math.nan
    lhs_hered: object = None
    k_int: IntegerLikeness | None = None

    @property
    def k_int1(self) -> float:
        return self.k_int.best()[1] if self.k_int else math.nan

    @property
    def k_int2(self) -> float:
        return self.k_int.best()[0] if self.k_int else math.nan

    @property
    def k_int3(self) -> float:
        return self.k_int.best()[2] if self.k_int else math.nan


def default_k2_grid(seq: WeightedSequence) -> list[float]:
    x = seq.x
    return [x ** e for e in (0.25, 0.5, 0.75)]


def measure_profile(seq: WeightedSequence, Q: float, t: FactorTable | None = None,
                    H_grid=None, P: float | None = None, R: float | None = None,
                    K2_candidates=None, full_limit: int = FULL_WINDOW_LIMIT) -> ConditionProfile:
    """All condition constants for (seq, Q).  K_int is measured only when P and R are given."""
    t = _table(seq, t)
    x = seq.x
    prof = ConditionProfile(x, Q)
    prof.k_prog, prof.lhs_prog = measure_k_prog(seq, Q)
    grid = sorted({1, 2 * x / Q, *(H_grid or ())})
    prof.k_conc, prof.lhs_conc = measure_k_conc(seq, Q, grid)
    prof.k_hered, prof.lhs_hered = measure_k_hered(seq, Q, t)
    if P is not None and R is not None:
        k2 = K2_candidates if K2_candidates is not None else default_k2_grid(seq)
        prof.k_int = measure_k_int(seq, Q, P, R, k2, t, full_limit)
    return prof
