"""Main-term predictions for the variance with itemised error budgets.

Every budget entry is the corresponding error term evaluated with implied
constant 1 (a heuristic scale, not a bound).  Main terms use signed sums and
budgets absolute sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baseline import unit_integral
from .conditions import ConditionProfile
from .sequences import WeightedSequence
from .sieves import FactorTable, build_factor_table
from .smooth import SmoothContext, psi, smooth_context
from .variance import as_float, in_theorem_range


@dataclass
class Prediction:
    main_terms: dict
    error_budget: dict
    flags: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    comparison: dict | None = None

    @property
    def total_main(self) -> float:
        return math.fsum(self.main_terms.values())

    @property
    def budget_total(self) -> float:
        return math.fsum(self.error_budget.values())


def _over(num: float, k: float) -> float:
    """num / k with an infinite or unmeasured k contributing nothing."""
    if num == 0 or math.isinf(k):
        return 0.0
    if k == 0:
        return math.inf
    return num / k


def _sums(seq: WeightedSequence, t: FactorTable | None):
    if t is None or t.limit < seq.n:
        t = build_factor_table(max(seq.n, 2))
    w = seq.weights.astype(np.float64)
    a = np.abs(w)
    tau = t.tau_table[1 : seq.n + 1]
    return t, {
        "signed": float(seq.total()),
        "abs": float(seq.abs_total()),
        "square": float(seq.square_total()),
        "square_tau": math.fsum((w * w * tau).tolist()),
        "abs_tau3": math.fsum((a * t.tau3_table()[1 : seq.n + 1]).tolist()),
    }


def theorem1_prediction(seq: WeightedSequence, Q: float, profile: ConditionProfile,
                        t: FactorTable | None = None) -> Prediction:
    x = seq.x
    if not in_theorem_range(x, Q):
        raise ValueError("need sqrt(2x) < Q <= x")
    t, s = _sums(seq, t)
    S2 = s["abs"] ** 2
    main = {"diagonal": Q / 2 * s["square"]}
    budget = {
        "progressions": _over(S2, profile.k_prog),
        "concentration": _over(S2, profile.k_conc.get(2 * x / Q, math.inf)),
        "hereditary": _over(S2 * math.log(2 * x / Q) ** 2, profile.k_hered),
        "square_tau": s["square_tau"],
    }
    flags = {"unit_constant_heuristic": True, "in_theorem_range": True}
    return Prediction(main, budget, flags)


def _theorem2_budget(s: dict, x: float, Q: float, P: float, R: float, profile: ConditionProfile,
                     K1: float, K2: float, K3: float, abs_tau3_P: float) -> dict:
    S = s["abs"]
    S2 = S * S
    kc1 = profile.k_conc.get(1, math.inf)
    kc2 = profile.k_conc.get(2 * x / Q, math.inf)
    logsix = math.log(P * x / Q) ** 6
    conc_root = 0.0 if math.isinf(kc2) else math.sqrt(Q / (x * kc2))
    return {
        "square_tau": s["square_tau"],
        "progressions": _over(S2, profile.k_prog),
        "concentration": _over(S2 * math.log(x), P * math.log(P) * kc1),
        "int1_concentration": _over(S2 * math.log(P) * conc_root, K1),
        "int1_tau3": _over(S * logsix * Q * abs_tau3_P, x * K1),
        "int23_tau3": S * logsix * math.log(x) ** 3 * s["abs_tau3"] * (
            _over(R * P, K2) + Q * K3 / (x * R ** (1 / math.log(P)))
        ) if S else 0.0,
    }


def theorem2_prediction(seq: WeightedSequence, Q: float, P: float, R: float,
                        profile: ConditionProfile, t: FactorTable | None = None) -> Prediction:
    """Three main terms and the itemised budget.

    The integer-likeness constants are taken from the measured frontier entry
    with the smallest total budget.
    """
    x = seq.x
    if not 3 <= P <= R:
        raise ValueError("need 3 <= P <= R")
    if not in_theorem_range(x, Q):
        raise ValueError("need sqrt(2x) < Q <= x")
    t, s = _sums(seq, t)
    w = np.abs(seq.weights.astype(np.float64))
    abs_tau3_P = math.fsum((w * t.tau3_table(P * x / Q)[1 : seq.n + 1]).tolist())
    main = {
        "diagonal": Q / 2 * s["square"],
        "density": -Q / 2 * s["signed"] ** 2 / x,
        "integral": s["signed"] ** 2 * unit_integral(x / Q, 2 * x / Q),
    }
    frontier = profile.k_int.frontier if profile.k_int else [(math.inf, math.inf, math.inf)]
    best = None
    for K2, K1, K3 in frontier:
        b = _theorem2_budget(s, x, Q, P, R, profile, K1, K2, K3, abs_tau3_P)
        tot = math.fsum(b.values())
        if best is None or tot < best[0]:
            best = (tot, b, (K1, K2, K3))
    flags = {
        "unit_constant_heuristic": True,
        "in_theorem_range": True,
        "parameter_window": R <= x ** 0.1,
    }
    params = {"P": P, "R": R, "K1": best[2][0], "K2": best[2][1], "K3": best[2][2]}
    return Prediction(main, best[1], flags, params)


def corollary_prediction(x: float, y: float, Q: float, A: float = 1.0,
                         ctx: SmoothContext | None = None, t: FactorTable | None = None,
                         c: float = 1.0, C: float = 10.0) -> Prediction:
    """Smooth-number main terms; c and C stand in for the unspecified absolute constants."""
    if ctx is None:
        if t is None or t.limit < math.floor(x):
            t = build_factor_table(max(math.floor(x), 2))
        ctx = smooth_context(x, y, t)
    count = ctx.psi_exact
    if count is None:
        count = psi(x, y, t)
    u = ctx.u
    lx = math.log(x)
    main = {
        "diagonal": Q / 2 * count * (1 - count / x),
        "integral": count * count * unit_integral(x / Q, 2 * x / Q),
    }
    budget = {
        "density": count * count * (math.exp(-c * u / math.log(u + 1) ** 2) / lx ** A + y ** -c),
        "diagonal": Q * count * math.exp(-c * u * math.log(u + 1)) * math.log(lx) ** 12 / lx,
    }
    flags = {
        "unit_constant_heuristic": True,
        "y_range": lx ** C <= y <= x,
        "Q_range": x ** 0.51 <= Q <= x,
    }
    return Prediction(main, budget, flags, {"c": c, "C": C, "A": A, "psi": count})


def compare(pred: Prediction, v_exact) -> Prediction:
    v = as_float(v_exact)
    gap = abs(v - pred.total_main)
    main = abs(pred.total_main)
    budget = pred.budget_total
    pred.comparison = {
        "v_exact": v,
        "abs_gap": gap,
        "gap_over_main": gap / main if main else (0.0 if gap == 0 else math.inf),
        "gap_over_budget": gap / budget if budget else (0.0 if gap == 0 else math.inf),
    }
    return pred
