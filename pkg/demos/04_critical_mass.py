"""Mass-critical dichotomy: the threshold mass where m(c) jumps to -infinity.

At p = pq* the constrained energy satisfies m(c) = 0 for c <= c2* and
m(c) = -infinity beyond.  The threshold has a closed form through the
sharp constant (equivalently, through the ground-state mass); the
dilation-ray scan reproduces it independently to many digits.
"""

from nqlap import (
    FlowOptions,
    GnOptions,
    build_grid,
    critical_mass_c2,
    detect_unbounded,
    flow_minimize,
    grading_for_first_node,
    validate,
)
from nqlap.flow import SolveStatus

params = validate(2, 3.0, 5.5, 0.5)  # pq* = 5.5 exactly
grid = build_grid(2, 40.0, 2048, grading_for_first_node(40.0, 2048))

res = critical_mass_c2(params, grid, opts=GnOptions(n_restarts=3, seed=0))
print(f"constant-form  c2* = {res.c2_star:.8f}")
print(f"mass-form      c2* = {res.c2_star_alt:.8f}")
print(f"relative gap        = {res.relative_gap:.2e}")
Q = res.gn.Q

print()
print("dilation-ray verdicts around the threshold:")
for mult in (0.5, 0.9, 0.99, 1.01, 1.1, 2.0):
    flag, t = detect_unbounded(params, mult * res.c2_star, Q)
    verdict = f"unbounded (witness t = {t:g})" if flag else "bounded on the ray"
    print(f"  c = {mult:4.2f} c2*: {verdict}")

lo, hi = 0.25 * res.c2_star, 4.0 * res.c2_star
for _ in range(50):
    mid = 0.5 * (lo + hi)
    flag, _ = detect_unbounded(params, mid, Q)
    lo, hi = (lo, mid) if flag else (mid, hi)
est = 0.5 * (lo + hi)
print(f"\nray-bisected threshold = {est:.8f} "
      f"(off the formula by {abs(est - res.c2_star) / res.c2_star:.1e})")

print()
print("flow behavior on both sides:")
rep = flow_minimize(params, 0.9 * res.c2_star, grid, FlowOptions(max_iters=3000))
print(f"  c = 0.9 c2*: value {rep.value: .3e}, lowest energy along the flow "
      f"{rep.notes['min_energy']: .3e}  [{rep.status.value}]")
rep = flow_minimize(params, 2.0 * res.c2_star, grid, u0=Q)
assert rep.status is SolveStatus.UNBOUNDED_BELOW
print(f"  c = 2.0 c2*: {rep.status.value} with witness dilation "
      f"t = {rep.notes['witness_t']:g} driving I below {rep.notes['witness_energy']:.1e}")
