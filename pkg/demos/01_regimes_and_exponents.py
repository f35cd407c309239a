"""Tour of the parameter space: derived exponents and regime classification.

The equation -lap(u) - lap_q(u) = lam u + |u|^(p-2) u / |x|^b changes
character at two values of p: below p2* = 2(2-b)/N + 2 the constrained
energy is negative for every mass, between p2* and the mass-critical
pq* = 2(q-b)/N + q a finite threshold mass appears, at pq* a single
critical mass separates zero from -infinity, and above pq* the energy is
unbounded and ground states live on the zero set of the dilation
derivative.
"""

import numpy as np

from nqlap import classify, sigma, validate

print("=" * 70)
print("Derived exponents at a few parameter points")
print("=" * 70)
for N, q, p, b in [(2, 3.0, 3.0, 0.5), (2, 3.0, 4.0, 0.5), (2, 3.0, 5.5, 0.5),
                   (3, 2.5, 3.75, 1.0), (1, 4.0, 6.0, 0.9)]:
    ps = validate(N, q, p, b)
    reg = classify(ps)
    print(f"N={N} q={q} p={p} b={b}:")
    print(f"  sigma_pq = {sigma(ps):.6f}   p2* = {ps.p2_star:.4f}   "
          f"pq* = {ps.pq_star:.4f}   qb* = {ps.qb_star:.4f}")
    print(f"  regime: {reg.tag.value}   attainment hypotheses met: {reg.compactness_ok}")

print()
print("=" * 70)
print("Sweeping p across the regime boundaries at (N=2, q=3, b=0.5)")
print("=" * 70)
for p in np.arange(2.25, 6.76, 0.25):
    ps = validate(2, 3.0, float(p), 0.5)
    tag = classify(ps).tag.value
    bar = "#" * int(4 * (p - 2))
    print(f"p = {p:4.2f}  {tag:22s} {bar}")

print()
print("At the mass-critical exponent the gradient exponent equals q itself:")
ps = validate(2, 3.0, 5.5, 0.5)
print(f"  sigma(2, 3, pq*=5.5, 0.5) = {sigma(ps):.12f}  (q = 3)")
