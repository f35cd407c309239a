"""Audit trail: the verification suite and the profile file round trip.

Any computed profile can be saved to a plain CSV (17 significant digits,
parameter header) and re-audited later: the dilation-derivative identity,
the discretized stationary equation, the exponential-decay conclusion, the
sharp-inequality domination over random fields, and the rearrangement
monotonicity all become machine-checked lines in a report.
"""

import os
import tempfile

from nqlap import (
    GnOptions,
    build_grid,
    grading_for_first_node,
    load_profile,
    minimize_gamma,
    minimize_weinstein,
    run_suite,
    save_profile,
    validate,
)

params = validate(3, 2.5, 3.75, 1.0)
grid = build_grid(3, 40.0, 2048, grading_for_first_node(40.0, 2048))

print("Computing a supercritical ground state and the sharp constant ...")
rep = minimize_gamma(params, 1.0, grid)
gn = minimize_weinstein(params, grid, GnOptions(n_restarts=2, seed=0))

path = os.path.join(tempfile.mkdtemp(), "profile.csv")
save_profile(path, rep.u, params)
params2, fld = load_profile(path)
exact = (params2 == params
         and (fld.values == rep.u.values).all()
         and (fld.grid.r == rep.u.grid.r).all())
print(f"profile round trip through {path}: exact = {exact}")

print()
print("Verification report for the computed minimizer:")
report = run_suite(fld, params2, lam=rep.lam, K=gn.K, n_samples=100, seed=0)
for chk in report.checks:
    state = {True: "pass", False: "FAIL", None: "n/a "}[chk.passed]
    print(f"  [{state}] {chk.name:28s} value={chk.value:.4g} "
          f"threshold={chk.threshold:.4g}  {chk.notes}")
print(f"all passed: {report.all_passed()}")
