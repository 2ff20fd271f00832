"""How the high-frequency perturbation beta_n shrinks as n grows.

beta oscillates like sin(k x1) inside bumps of width 1/lambda, lambda = k^a.
Its W^{1,r} norm stays of order one while the velocity it induces decays.
The fitted slopes are compared with the crude estimate -1 + 2a(1/r - 1/p)
and with the sharp rate -2 + 2a(1/r - 1/p), which counts the full k^-1 gain
of the inverse Laplacian on frequencies |xi| ~ k.
"""

import numpy as np

from illposed.experiments import norm_scaling, scaling_exponents

res = norm_scaling(N=512, omega0_M=(2,), omega0_N=(2,), omega0_r=(2.5,))
t = res.table("norm_scaling")
print(f"{'k':>5} {'L':>8} {'||beta||_W1r':>14} {'|xi|^1.5 grad inv-lap':>22} {'grad inv-lap':>14}")
for row in t.rows:
    print(f"{row[0]:5d} {row[2]:8.4f} {row[4]:14.5f} {row[5]:22.5e} {row[6]:14.5e}")

pred = scaling_exponents(0.5, 4.0, np.inf, 0.5)
print("\nslopes in log k:")
for c in res.checks[:3] + res.checks[4:5]:
    print(f"  {c.name:<18} measured {c.measured:+.3f}   predicted {c.predicted}   {'ok' if c.passed else 'off'}")
print(f"\ncrude item-3 exponent {pred['item3']}, sharp exponent {pred['item3_sharp']}")
