"""
Diagonal term versus the exact variance
=======================================

For a sparse random set the variance is almost entirely its diagonal part
Q/2 * sum a_n^2.  For the smooth numbers the prediction adds a density
correction and an integral term; at desk scale it still overshoots, and the
overshoot shrinks only slowly with x.
"""
from bdhlab import (build_factor_table, corollary_prediction, compare, generate, psi,
                    smooth_variance, variance_direct)

t = build_factor_table(10**5)

x = 10**5
Q = x**0.75
for alpha in (0.001, 0.01, 0.1, 0.5):
    A = generate("bernoulli", x, t, alpha=alpha, seed=3)
    v = float(variance_direct(A, Q, t))
    diag = Q / 2 * float(A.square_total())
    print(f"alpha={alpha:<6} V/diagonal = {v / diag:.4f}")

# Smooth numbers with y = x^(1/3), Q = x^0.8.
for x in (10**3, 10**4, 10**5):
    y, Q = x ** (1 / 3), x**0.8
    v = smooth_variance(x, y, Q, t)
    pred = compare(corollary_prediction(x, y, Q, t=t), v)
    print(f"x={x:<7} Psi={psi(x, y, t):<6} gap/V = {pred.comparison['abs_gap'] / float(v):.3f}")
