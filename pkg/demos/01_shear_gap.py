"""Two shear flows that start eps apart in C^{1+sigma} and are a fixed distance apart at once.

    u(t, x) = (f(x2), 0, h(x1 - t f(x2)))

The third component is transported by the horizontal shear.  Because
h'(s) = |s|^sigma near the origin, the x1-derivative of u3 develops a Hoelder
quotient of 2 between the two solutions for every t > 0, however small eps is.
"""

import numpy as np

from illposed.shear3d import ShearSolution, constant_pair, solution_gap, verify_euler

sigma = 0.5
print(f"sigma = {sigma}\n")
print(f"{'eps':>8} {'t':>6} {'|u0 - v0|':>12} {'gap lower bound':>16} {'residual':>10}")
for eps in (1e-1, 1e-2, 1e-3):
    spec = constant_pair(sigma, eps)
    for t in (0.01, 0.1, 1.0):
        r = solution_gap(spec, t)
        res = max(verify_euler(ShearSolution(spec, t, w)) for w in ("f", "g"))
        print(f"{eps:8.0e} {t:6.2f} {r.initial_distance:12.3e} {r.gap_lower_bound:16.6f} {res:10.1e}")

# the witness pair: x1 = t f(c) against x1 = t g(c), where one solution is singular
spec = constant_pair(sigma, 1e-3)
r = solution_gap(spec, 0.01)
print(f"\nquotients at the analytic witness pairs (t = 0.01): {np.unique(np.round(r.witness_quotients, 12))}")
