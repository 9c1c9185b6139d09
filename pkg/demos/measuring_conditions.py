"""
Measuring the distribution hypotheses
=====================================

Each hypothesis becomes a computed left-hand side and an implied constant K.
Large K means the hypothesis holds with room to spare.
"""
from bdhlab import build_factor_table, generate, measure_profile

t = build_factor_table(20000)
x, Q = 20000, 2000

for kind, params in [("integers", {}), ("von_mangoldt", {}),
                     ("multiples_indicator", {"p": 7}), ("smooth_indicator", {"y": 30})]:
    seq = generate(kind, x, t, **params)
    prof = measure_profile(seq, Q, t, P=3, R=5)
    print(f"{kind:<20} K_prog={prof.k_prog:10.4g}  K_conc[2x/Q]={prof.k_conc[2 * x / Q]:10.4g}  "
          f"K_hered={prof.k_hered:10.4g}  K_int1={prof.k_int1:10.4g}  K_int3={prof.k_int3:8.4g}")

# Multiples of p are badly distributed mod p, so K_prog falls as p grows.
for p in (3, 7, 31):
    seq = generate("multiples_indicator", x, t, p=p)
    print(p, measure_profile(seq, Q, t).k_prog)
