"""
How the integers spread over progressions
=========================================

Every integer up to x sits in exactly one class mod q, so the variance of
the full set comes only from the fractional parts of x/q.  Three routes to
the same number: the exact bucket count, the sum of q{x/q}(1-{x/q}), and the
integral the sum approximates.
"""
import numpy as np

from bdhlab import baseline_report, build_factor_table, unit_integral

t = build_factor_table(10**5)

print(f"{'x':>7} {'Q':>7} {'exact':>16} {'bernoulli sum':>16} {'integral':>16}")
for x in (10**3, 10**4, 10**5):
    for Q in (round(x**0.6), round(x**0.75)):
        r = baseline_report(x, Q, t)
        print(f"{x:>7} {Q:>7} {float(r.v_exact):>16.6g} {r.bernoulli_sum:>16.6g} {r.integral_value:>16.6g}")

# As x/Q grows the integral settles at Q^2/16.

for ratio in (2, 10, 100, 1000):
    print(ratio, 16 * ratio**2 * unit_integral(ratio, 2 * ratio))

# The closed form is exact, not a fit: compare a brute-force trapezoid rule.
v = np.linspace(3, 6, 3_000_001)
frac = v - np.floor(v)
mid = np.trapezoid(frac * (1 - frac) / v**3, v)
print(mid, unit_integral(3, 6))
