"""Subcritical phase diagram: the global minimum m(c) and its threshold mass.

Below p2* the level m(c) is negative for every mass.  Between p2* and the
mass-critical exponent it stays exactly zero up to a finite threshold c1*
and turns strictly negative beyond it; the threshold is located by
bisection on the sign of the flow's converged energy.
"""

import time

from nqlap import (
    FlowOptions,
    build_grid,
    find_c1_star,
    flow_minimize,
    grading_for_first_node,
    mass_energy_curve,
    validate,
)

grid = build_grid(2, 40.0, 2048, grading_for_first_node(40.0, 2048))

print("=" * 70)
print("p = 3 (below p2* = 3.5): m(c) < 0 for every mass")
print("=" * 70)
low = validate(2, 3.0, 3.0, 0.5)
for c in (1.0, 3.0, 10.0, 30.0):
    t0 = time.time()
    rep = flow_minimize(low, c, grid)
    print(f"  m({c:5.1f}) = {rep.value: .6e}   lam = {rep.lam: .4f}   "
          f"[{rep.status.value}, {rep.iterations} its, {time.time()-t0:.1f} s]")

print()
print("=" * 70)
print("p = 4 (between p2* and pq*): a finite threshold mass appears")
print("=" * 70)
high = validate(2, 3.0, 4.0, 0.5)
t0 = time.time()
res = find_c1_star(high, grid, bracket=(1.0, 32.0), tol=1e-3,
                   opts=FlowOptions(max_iters=6000))
print(f"threshold mass c1* = {res.c1_star:.4f}  "
      f"(bracket width {res.bracket[1]-res.bracket[0]:.2e}, {time.time()-t0:.1f} s)")
print("bisection trace:")
for c, neg, val in res.evaluations:
    side = "m < 0" if neg else "m ~ 0"
    print(f"  c = {c:9.4f}   {side}   (flow value {val: .3e})")

print()
print("mass-energy curve across the threshold (on the truncated ball the")
print("zero side sits on a small positive floor ~ lam1(B_R) c / 2):")
cs = [0.5 * res.c1_star, 0.9 * res.c1_star, 1.1 * res.c1_star,
      1.5 * res.c1_star, 2.0 * res.c1_star]
curve = mass_energy_curve(high, cs, grid)
for row in curve.rows:
    print(f"  c = {row.c:8.3f}   m = {row.m: .5e}   [{row.status.value}]")
