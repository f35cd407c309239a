"""Sharp interpolation constant via quotient descent, cross-checked by shooting.

The scale-invariant quotient

    J(u) = |grad u|_q^sigma |u|_2^(p-sigma) / integral |x|^-b |u|^p

has a positive infimum m; its reciprocal K = 1/m is the sharp constant in

    integral |x|^-b |u|^p  <=  K |grad u|_q^sigma |u|_2^(p-sigma).

A minimizer, normalized by a joint amplitude/dilation gauge, solves

    -sigma lap_q(w) + (p - sigma) w = |x|^-b w^(p-1),            (*)

and any decaying solution of (*) satisfies the intrinsic identities

    |grad w|_q^q = |w|_2^2 = (1/p) integral |x|^-b |w|^p,

from which K = p / |w|_2^(2 sigma/q + p - sigma - 2).  (For q = 2 the
exponent collapses to the familiar p - 2; for q > 2 an amplitude rescaling
alone cannot reach the unit-coefficient form of (*), so the gauge solves a
2x2 log-linear system in (amplitude, dilation).)

Two independent routes are implemented: preconditioned descent on log J
(`minimize_weinstein`) and an outward shooting integration of the radial
ODE for (*) (`shooting_oracle`).  At the mass-critical exponent the ground
state of (*) also determines the threshold mass `critical_mass_c2`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import solveh_banded

from .errors import (
    BracketNotFound,
    DegenerateComponents,
    InvalidRegime,
    NoConvergence,
    StiffFailure,
)
from .params import ParameterSet
from .radial import (
    FiberComponents,
    RadialField,
    RadialGrid,
    _resample,
    adjoint_flux,
    components,
    decreasing_rearrangement,
    phi_q,
    slopes,
    weinstein_from_components,
)

FLUX_EPS = 1e-10  # |u'| -> sqrt(u'^2 + eps^2) in degenerate-diffusion matrices


@dataclass
class GnOptions:
    max_iters: int = 100_000
    stall_window: int = 100
    stall_rtol: float = 1e-13
    grad_rtol: float = 1e-10
    armijo: float = 1e-4
    n_restarts: int = 5
    seed: int = 0
    rearrange: bool = True


@dataclass
class GnResult:
    """Converged quotient minimizer and the quantities derived from it.

    Q is the profile in the unit-coefficient gauge (*); J_min = 1/K is the
    quotient minimum; el_residual is the relative weighted sup norm of the
    discrete Euler-Lagrange residual at the minimizer; identity_residuals
    holds the relative errors of the mass identity ap = p m2 and the virial
    split aq = ap / p on the gauged profile.
    """

    Q: RadialField
    J_min: float
    K: float
    el_residual: float
    identity_residuals: dict
    restart_values: list
    meta: dict = field(default_factory=dict)


def _tridiag_precond(grid: RadialGrid, v: np.ndarray, q: float):
    """SPD tridiagonal W + S2 + Sq(v) in solveh_banded upper form, interior nodes."""
    s = slopes(grid, v)
    dq = (s * s + FLUX_EPS**2) ** ((q - 2.0) / 2.0)
    coef = grid.wc * (1.0 + dq) / grid.dr**2
    n = grid.n
    diag = grid.w.copy()
    diag[:-1] += coef
    diag[1:] += coef
    ab = np.zeros((2, n - 1))
    ab[1] = diag[:-1]
    ab[0, 1:] = -coef[:-1]
    return ab


def _precond_solve(ab: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    out = np.zeros(rhs.size)
    out[:-1] = solveh_banded(ab, rhs[:-1])
    return out


def _quotient_state(grid: RadialGrid, v: np.ndarray, params: ParameterSet):
    """Return (J, comp, glog, scale_terms) at v; glog is grad of log J."""
    s = slopes(grid, v)
    ws = grid.singular_weights(params.b)
    comp = FiberComponents(
        a2=float(np.dot(grid.wc, s * s)),
        aq=float(np.dot(grid.wc, np.abs(s) ** params.q)),
        ap=float(np.dot(ws, np.abs(v) ** params.p)),
        m2=float(np.dot(grid.w, v * v)),
    )
    J = weinstein_from_components(comp, params)
    sig, p, q = params.sigma_pq, params.p, params.q
    t1 = sig * adjoint_flux(grid, grid.wc * phi_q(s, q) / grid.dr) / comp.aq
    t2 = (p - sig) * (grid.w * v) / comp.m2
    t3 = p * ws * np.abs(v) ** (p - 2.0) * v / comp.ap
    return J, comp, t1 + t2 - t3, (t1, t2, t3)


def _el_residual(grid: RadialGrid, terms, lo: int = 3, hi: int = 3) -> float:
    """Relative weighted sup norm of the EL residual, boundary stencils excluded."""
    t1, t2, t3 = terms
    sl = slice(lo, grid.n - hi)
    w = grid.w[sl]
    res = np.abs(t1[sl] + t2[sl] - t3[sl]) / w
    scale = (np.abs(t1[sl]) + np.abs(t2[sl]) + np.abs(t3[sl])) / w
    smax = float(scale.max())
    return float(res.max()) / smax if smax > 0 else 0.0


def _descend_quotient(grid: RadialGrid, v0: np.ndarray, params: ParameterSet,
                      opts: GnOptions):
    """Preconditioned descent on log J with amplitude normalization.

    The quotient is invariant under u -> a u and u -> u(eta x), so the
    gradient has no component along either symmetry; only the amplitude is
    re-normalized each step (exact, no resampling).
    """
    v = np.abs(v0.copy())
    v[-1] = 0.0
    m2 = float(np.dot(grid.w, v * v))
    v /= math.sqrt(m2)
    hist = []
    step = 1.0
    J, comp, glog, terms = _quotient_state(grid, v, params)
    for it in range(opts.max_iters):
        ab = _tridiag_precond(grid, v, params.q)
        d = _precond_solve(ab, glog)
        slope = float(glog @ d)
        if not math.isfinite(slope) or slope <= 0.0:
            break
        logJ = math.log(J)
        alpha = min(step * 2.0, 4.0)
        accepted = False
        for _ in range(60):
            vt = np.abs(v - alpha * d)
            vt[-1] = 0.0
            if vt.max() <= 0.0:
                alpha *= 0.5
                continue
            Jt, compt, glogt, termst = _quotient_state(grid, vt, params)
            if math.isfinite(Jt) and math.log(Jt) <= logJ - opts.armijo * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        step = alpha
        v, J, comp, glog, terms = vt, Jt, compt, glogt, termst
        if opts.rearrange:
            cand = decreasing_rearrangement(RadialField(grid, v)).values
            Jc, compc, glogc, termsc = _quotient_state(grid, cand, params)
            if Jc <= J:
                v, J, comp, glog, terms = cand, Jc, compc, glogc, termsc
        nrm = math.sqrt(comp.m2)
        v = v / nrm
        hist.append(J)
        if len(hist) > opts.stall_window and (
            hist[-opts.stall_window - 1] - J
        ) < opts.stall_rtol * abs(J):
            break
        if _el_residual(grid, terms) < opts.grad_rtol:
            break
    else:
        raise NoConvergence(f"quotient descent hit the {opts.max_iters} iteration cap")
    # terms are up to the amplitude normalization, which rescales all three
    # consistently, so the relative residual is unaffected.
    return v, J, comp, _el_residual(grid, terms)


def _omega_gauge(comp: FiberComponents, params: ParameterSet) -> tuple[float, float]:
    """(amplitude, dilation) moving a quotient minimizer into the gauge (*).

    Solves alpha^(q-2) eta^q = m2/aq, alpha^(p-2) eta^b = p m2/ap.  At q = 2
    this reduces to the pure-amplitude rescaling; for q > 2 both parameters
    are needed.
    """
    q, p, b = params.q, params.p, params.b
    det = (q - 2.0) * b - q * (p - 2.0)
    if abs(det) < 1e-10:
        raise DegenerateComponents(
            f"gauge system singular at p = 2 + b(q-2)/q (p={p}, q={q}, b={b})"
        )
    r1 = math.log(comp.m2 / comp.aq)
    r2 = math.log(p * comp.m2 / comp.ap)
    log_alpha = (r1 * b - r2 * q) / det
    log_eta = ((q - 2.0) * r2 - (p - 2.0) * r1) / det
    return math.exp(log_alpha), math.exp(log_eta)


def sharp_constant_exponent(params: ParameterSet) -> float:
    """Exponent theta with K = p / |Q|_2^theta; equals p - 2 when q = 2."""
    sig = params.sigma_pq
    return 2.0 * sig / params.q + params.p - sig - 2.0


def _omega_newton(grid: RadialGrid, v0: np.ndarray, params: ParameterSet,
                  max_steps: int = 40):
    """Damped Newton for the unit-coefficient ground-state equation (*).

    Unlike the quotient, (*) has no scaling invariance, so its linearization
    is full-rank tridiagonal and the iteration converges quadratically from
    the descent output, pushing the equation residual to roundoff.
    """
    from scipy.linalg import solve_banded

    sig, p, q = params.sigma_pq, params.p, params.q
    ws = grid.singular_weights(params.b)
    n = grid.n

    def F_of(v):
        s = slopes(grid, v)
        t1 = sig * adjoint_flux(grid, grid.wc * phi_q(s, q) / grid.dr)
        t2 = (p - sig) * grid.w * v
        t3 = ws * np.abs(v) ** (p - 2.0) * v
        F = t1 + t2 - t3
        sl = slice(1, n - 1)
        scale = float(np.max((np.abs(t1) + np.abs(t2) + np.abs(t3))[sl] / grid.w[sl]))
        sup = float(np.max(np.abs(F[sl]) / grid.w[sl]))
        return F, (sup / scale if scale > 0 else 0.0)

    x = v0.copy()
    F, best = F_of(x)
    improved = False
    for _ in range(max_steps):
        s = slopes(grid, x)
        # Scale-aware slope floor: the exact Jacobian loses the flux
        # coupling wherever the profile is locally flat (|s|^(q-2) -> 0),
        # which strands flattened cells; a Picard-style floor keeps them
        # attached while the residual still uses the exact flux.
        eps_j = max(FLUX_EPS, 1e-3 * float(np.sqrt(np.mean(s * s))))
        dq = (q - 1.0) * (s * s + eps_j**2) ** ((q - 2.0) / 2.0)
        coef = sig * grid.wc * dq / grid.dr**2
        diag = (p - sig) * grid.w - (p - 1.0) * ws * np.abs(x) ** (p - 2.0)
        diag[:-1] += coef
        diag[1:] += coef
        ab = np.zeros((3, n - 1))
        ab[1] = diag[:-1]
        ab[0, 1:] = -coef[:-1]
        ab[2, :-1] = -coef[:-1]
        try:
            step = solve_banded((1, 1), ab, -F[:-1])
        except Exception:
            break
        if not np.all(np.isfinite(step)):
            break
        alpha = 1.0
        accepted = False
        for _ in range(25):
            xt = x.copy()
            xt[:-1] = x[:-1] + alpha * step
            Ft, rt = F_of(xt)
            if math.isfinite(rt) and rt < best:
                x, F, best = xt, Ft, rt
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        improved = True
        if best < 1e-14:
            break
    return x, best, improved


def omega_el_residual(u: RadialField, params: ParameterSet,
                      boundary_skip: int = 3) -> float:
    """Relative weighted sup residual of the unit-coefficient ground-state
    equation (*) on a profile (descent output or shooting output alike)."""
    grid = u.grid
    v = u.values
    s = slopes(grid, v)
    sig, p = params.sigma_pq, params.p
    ws = grid.singular_weights(params.b)
    t1 = sig * adjoint_flux(grid, grid.wc * phi_q(s, params.q) / grid.dr)
    t2 = (p - sig) * grid.w * v
    t3 = ws * np.abs(v) ** (p - 2.0) * v
    return _el_residual(grid, (t1, t2, t3), boundary_skip, boundary_skip)


def minimize_weinstein(params: ParameterSet, grid: RadialGrid,
                       opts: GnOptions | None = None,
                       init: RadialField | None = None) -> GnResult:
    """Minimize the quotient over restarts and return the gauged ground state.

    Each restart starts from a Gaussian of random width (seeded); the best
    final quotient wins and the spread across restarts is recorded.  The
    returned profile Q solves (*); K = 1/J_min.  An explicit `init` replaces
    the first restart's Gaussian.
    """
    if not (2.0 < params.p < params.qb_star):
        raise InvalidRegime(f"p={params.p} outside (2, qb_star={params.qb_star})")
    opts = opts or GnOptions()
    rng = np.random.default_rng(opts.seed)
    best = None
    values = []
    for k in range(opts.n_restarts):
        if k == 0 and init is not None:
            v0 = np.abs(init.values.copy())
            v0[-1] = 0.0
        else:
            width = 1.0 if k == 0 else float(rng.uniform(0.4, 2.5))
            v0 = np.exp(-(grid.r**2) / (2.0 * width**2))
            if k > 0:
                v0 *= 1.0 + 0.2 * rng.uniform(-1.0, 1.0) * np.tanh(grid.r)
        try:
            v, J, comp, res = _descend_quotient(grid, v0, params, opts)
        except NoConvergence:
            if k == opts.n_restarts - 1 and best is None:
                raise
            continue
        values.append(J)
        if best is None or J < best[1]:
            best = (v, J, comp, res)
    if best is None:
        raise NoConvergence("no quotient descent restart converged")
    v, J_min, comp, el_res = best

    alpha, eta = _omega_gauge(comp, params)
    u = RadialField(grid, v)
    qvals = alpha * _resample(u, eta * grid.r)
    qvals[-1] = 0.0
    # Newton on the gauge-fixed equation pushes the residual to roundoff;
    # guarded so a wandering iteration cannot replace the descent output.
    polished, res, ok = _omega_newton(grid, qvals, params)
    if ok and np.abs(polished - qvals).max() <= 0.05 * np.abs(qvals).max():
        qvals, el_res = polished, res
    Q = RadialField(grid, qvals, metadata="quotient-descent ground state")
    cg = components(Q, params)
    J_final = weinstein_from_components(cg, params)
    if J_final < J_min:
        J_min = J_final
    ident = {
        "mass_identity": abs(cg.ap - params.p * cg.m2) / (params.p * cg.m2),
        "virial_split": abs(cg.aq - cg.ap / params.p) / (cg.ap / params.p),
    }
    return GnResult(
        Q=Q,
        J_min=J_min,
        K=1.0 / J_min,
        el_residual=el_res,
        identity_residuals=ident,
        restart_values=values,
        meta={"gauge_alpha": alpha, "gauge_eta": eta,
              "restart_spread": (max(values) - min(values)) / J_min if values else 0.0},
    )


# ---------------------------------------------------------------------------
# Shooting cross-check
# ---------------------------------------------------------------------------

@dataclass
class ShootingReport:
    field: RadialField
    s_star: float
    bracket: tuple
    orientation: str  # which side of s* crosses zero
    n_bisections: int


def _integrate_profile(params: ParameterSet, s: float, R: float,
                       # events: terminate on zero crossing or clear regrowth
                       grow_factor: float = 1.2, dense: bool = False):
    sig, p, q, b, N = params.sigma_pq, params.p, params.q, params.b, params.N
    r0 = 1e-6 * R
    qexp = 1.0 / (q - 1.0)

    def rhs(r, y):
        w, pi = y
        psi = pi / r ** (N - 1)
        dw = np.sign(psi) * np.abs(psi) ** qexp
        dpi = r ** (N - 1) * ((p - sig) * w - r ** (-b) * np.abs(w) ** (p - 2.0) * w) / sig
        return (dw, dpi)

    def ev_cross(r, y):
        return y[0]

    ev_cross.terminal = True
    ev_cross.direction = -1.0

    def ev_grow(r, y):
        return y[0] - grow_factor * s

    ev_grow.terminal = True
    ev_grow.direction = 1.0

    pi0 = ((p - sig) * s * r0**N / N - s ** (p - 1.0) * r0 ** (N - b) / (N - b)) / sig
    sol = solve_ivp(
        rhs, (r0, R), (s, pi0), method="RK45",
        rtol=1e-9, atol=(1e-13 * s, 1e-13 * s),
        events=(ev_cross, ev_grow), dense_output=dense, max_step=R / 50.0,
    )
    if sol.status == -1:
        raise StiffFailure(f"ODE integration failed at s={s}: {sol.message}")
    crossed = sol.t_events[0].size > 0
    return sol, crossed


def shoot(params: ParameterSet, grid: RadialGrid, tol: float = 1e-12) -> ShootingReport:
    """Bisect the shooting height for the radial ground state of (*).

    The two shooting outcomes are: the profile crosses zero at finite
    radius, or it stays positive (bottoms out and regrows / reaches R).
    The critical height separates them; the returned profile is evaluated
    on the grid, zero beyond the touchdown point.
    """
    R = grid.R
    s0 = 1.0
    _, crossed0 = _integrate_profile(params, s0, R)

    other = None
    fac = 2.0
    s = s0
    for _ in range(60):
        s = s * fac if not crossed0 else s / fac
        _, crossed = _integrate_profile(params, s, R)
        if crossed != crossed0:
            other = s
            break
    if other is None:
        # sweep the opposite direction before giving up
        s = s0
        for _ in range(60):
            s = s / fac if not crossed0 else s * fac
            _, crossed = _integrate_profile(params, s, R)
            if crossed != crossed0:
                other = s
                break
    if other is None:
        raise BracketNotFound("no sign change of the shooting outcome in 2^+-60")

    lo, hi = min(s0, other), max(s0, other)
    _, crossed_lo = _integrate_profile(params, lo, R)
    n_bis = 0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        _, crossed_mid = _integrate_profile(params, mid, R)
        if crossed_mid == crossed_lo:
            lo = mid
        else:
            hi = mid
        n_bis += 1
        if n_bis > 200:
            break
    s_star = 0.5 * (lo + hi)
    orientation = "small-s crosses zero" if crossed_lo else "large-s crosses zero"

    # Evaluate the output on the crossing side of the bracket: that shot
    # terminates exactly at its zero crossing, which approximates the
    # support edge (the profile is compactly supported for q > 2), and the
    # solution is identically zero beyond it.
    s_out = lo if crossed_lo else hi
    sol, crossed = _integrate_profile(params, s_out, R, dense=True)
    r_end = sol.t[-1]
    vals = np.zeros(grid.n)
    inside = grid.r < r_end
    vals[inside] = sol.sol(grid.r[inside])[0]
    vals[grid.r <= sol.t[0]] = s_out
    np.maximum(vals, 0.0, out=vals)
    vals[-1] = 0.0
    fld = RadialField(grid, vals, metadata=f"shooting s*={s_star:.12g}")
    return ShootingReport(fld, s_star, (lo, hi), orientation, n_bis)


def shooting_oracle(params: ParameterSet, grid: RadialGrid) -> RadialField:
    """Independent ground-state profile for (*) by outward shooting."""
    return shoot(params, grid).field


# ---------------------------------------------------------------------------
# Mass-critical threshold
# ---------------------------------------------------------------------------

@dataclass
class C2Result:
    c2_star: float
    c2_star_alt: float
    relative_gap: float
    gn: GnResult


def critical_mass_c2(params: ParameterSet, grid: RadialGrid,
                     gn: GnResult | None = None,
                     opts: GnOptions | None = None) -> C2Result:
    """Threshold mass at the mass-critical exponent.

    Requires p = pq_star (so sigma = q).  Two routes:

        c2 = (p / (q K))^(2/(p-q))        from the sharp constant,
        c2 = q^(2/(q-p)) |Q|_2^2          from the ground-state mass,

    which coincide through K = p / |Q|_2^(p-q) (the sharp-constant exponent
    2 sigma/q + p - sigma - 2 equals p - q here).  Their relative gap is a
    diagnostic of the solve.
    """
    p, q = params.p, params.q
    if abs(p - params.pq_star) > 1e-10 * max(p, params.pq_star):
        raise InvalidRegime(
            f"mass-critical threshold needs p = pq_star = {params.pq_star}, got p = {p}"
        )
    if gn is None:
        gn = minimize_weinstein(params, grid, opts)
    c2 = (p / (q * gn.K)) ** (2.0 / (p - q))
    m2_q = components(gn.Q, params).m2
    c2_alt = q ** (2.0 / (q - p)) * m2_q
    gap = abs(c2 - c2_alt) / c2
    return C2Result(c2_star=c2, c2_star_alt=c2_alt, relative_gap=gap, gn=gn)
